//! Python bindings. Clustering results come back as the same dictionaries the
//! command-line tool prints as JSON.

use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use ::rgather::cluster::{self, GraphMode, RGatherOptions};
use ::rgather::dynamic;
use ::rgather::io::{self, ClusteringOutput};
use ::rgather::metric;
use ::rgather::mpc::{CostLedger, CostModel};
use ::rgather::Error;

create_exception!(rgather_py, InfeasibleError, PyValueError, "No feasible clustering exists.");

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Infeasible(_) => InfeasibleError::new_err(e.to_string()),
        Error::UnknownId(_) => PyKeyError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(value_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let dict = PyDict::new(py);
            for (k, x) in m {
                dict.set_item(k, value_to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

fn parse_mode(mode: &str) -> PyResult<GraphMode> {
    match mode {
        "exact" => Ok(GraphMode::Exact),
        "lsh" => Ok(GraphMode::LshExplicit),
        "lsh-sparse" => Ok(GraphMode::LshSparse),
        other => Err(PyValueError::new_err(format!(
            "unknown mode {other:?}; expected exact, lsh or lsh-sparse"
        ))),
    }
}

/// A finite set of points with distinct integer ids.
#[pyclass(name = "PointSet", module = "rgather_py", frozen)]
struct PyPointSet {
    inner: metric::PointSet,
}

#[pymethods]
impl PyPointSet {
    /// Builds a point set from rows of coordinates; ids default to 0, 1, ...
    #[new]
    #[pyo3(signature = (rows, ids = None))]
    fn new(rows: Vec<Vec<f64>>, ids: Option<Vec<u64>>) -> PyResult<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let ids = ids.unwrap_or_else(|| (0..rows.len() as u64).collect());
        if ids.len() != rows.len() {
            return Err(PyValueError::new_err("ids and rows differ in length"));
        }
        let inner = metric::PointSet::new(dim, ids.into_iter().zip(rows).collect()).map_err(to_py_err)?;
        Ok(PyPointSet { inner })
    }

    /// Parses the `dim=` text format used by the command-line tool.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyPointSet {
            inner: io::parse_points_str(text).map_err(to_py_err)?,
        })
    }

    fn to_text(&self) -> String {
        io::format_points(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn ids(&self) -> Vec<u64> {
        self.inner.ids().to_vec()
    }

    fn coords(&self, id: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.coords_of(id).map_err(to_py_err)?.to_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PointSet(n={}, dim={})", self.inner.len(), self.inner.dim())
    }

    /// Distance from `id` to its r-th nearest neighbor, counting itself first.
    fn rho_r(&self, id: u64, r: usize) -> PyResult<f64> {
        metric::rho_r(&self.inner, id, r).map_err(to_py_err)
    }

    fn rho_hat(&self, r: usize) -> PyResult<f64> {
        metric::rho_hat(&self.inner, r).map_err(to_py_err)
    }
}

struct Run {
    opts: RGatherOptions,
    ledger: CostLedger,
}

impl Run {
    fn new(p: &metric::PointSet, mode: &str, c: f64, beta: usize, grid_ratio: f64, seed: u64) -> PyResult<Self> {
        Ok(Run {
            opts: RGatherOptions {
                mode: parse_mode(mode)?,
                c,
                beta,
                grid_ratio,
                seed,
            },
            ledger: CostLedger::new(CostModel::new(p.len(), 0.5).map_err(to_py_err)?),
        })
    }

    fn finish<'py>(
        self,
        py: Python<'py>,
        p: &metric::PointSet,
        r: usize,
        r_used: Option<f64>,
        sol: metric::Clustering,
        power: Option<u32>,
        report_cost: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut out = ClusteringOutput::new(p, r, r_used, sol, power).map_err(to_py_err)?;
        if report_cost {
            out.cost_report = Some(self.ledger.report());
        }
        serialize(py, &out)
    }
}

/// Clusters of at least `r` points with small maximum radius.
#[pyfunction]
#[pyo3(name = "rgather", signature = (points, r, *, mode = "exact", c = 2.0, beta = 1, grid_ratio = 2.0, seed = 0, power = None, report_cost = false))]
#[allow(clippy::too_many_arguments)]
fn rgather_plain<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    r: usize,
    mode: &str,
    c: f64,
    beta: usize,
    grid_ratio: f64,
    seed: u64,
    power: Option<u32>,
    report_cost: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &points.inner;
    let run = Run::new(p, mode, c, beta, grid_ratio, seed)?;
    let res = py
        .detach(|| cluster::rgather(p, r, &run.opts, &run.ledger))
        .map_err(to_py_err)?;
    run.finish(py, p, r, Some(res.r_used), res.clustering, power, report_cost)
}

/// Like `rgather`, but up to `outliers` points may stay unclustered.
#[pyfunction]
#[pyo3(signature = (points, r, outliers, *, mode = "exact", c = 2.0, beta = 1, grid_ratio = 2.0, seed = 0, power = None, report_cost = false))]
#[allow(clippy::too_many_arguments)]
fn rgather_outliers<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    r: usize,
    outliers: usize,
    mode: &str,
    c: f64,
    beta: usize,
    grid_ratio: f64,
    seed: u64,
    power: Option<u32>,
    report_cost: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &points.inner;
    let run = Run::new(p, mode, c, beta, grid_ratio, seed)?;
    let res = py
        .detach(|| cluster::rgather_outliers(p, r, outliers, &run.opts, &run.ledger))
        .map_err(to_py_err)?;
    run.finish(py, p, r, Some(res.r_used), res.clustering, power, report_cost)
}

/// Clusters whose radius at each point is bounded by that point's r-th
/// nearest neighbor distance.
#[pyfunction]
#[pyo3(signature = (points, r, *, mode = "exact", c = 2.0, beta = 1, grid_ratio = 2.0, seed = 0, power = None, report_cost = false))]
#[allow(clippy::too_many_arguments)]
fn rgather_pointwise<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    r: usize,
    mode: &str,
    c: f64,
    beta: usize,
    grid_ratio: f64,
    seed: u64,
    power: Option<u32>,
    report_cost: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &points.inner;
    let run = Run::new(p, mode, c, beta, grid_ratio, seed)?;
    let res = py
        .detach(|| cluster::rgather_pointwise(p, r, &run.opts, &run.ledger))
        .map_err(to_py_err)?;
    let last = res.phases.last().map(|ph| ph.radius);
    run.finish(py, p, r, last, res.clustering, power, report_cost)
}

/// Exact optimal radius by exhaustive search; small inputs only.
#[pyfunction]
#[pyo3(signature = (points, r, outliers = 0))]
fn brute_force_opt_radius(points: &PyPointSet, r: usize, outliers: usize) -> PyResult<f64> {
    metric::brute_force_opt_radius_outliers(&points.inner, r, outliers).map_err(to_py_err)
}

/// Recomputes the metrics of a clustering document and compares them.
#[pyfunction]
#[pyo3(signature = (points, solution_json, r, outliers = None))]
fn verify<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    solution_json: &str,
    r: usize,
    outliers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = io::verify(&points.inner, solution_json, r, outliers).map_err(to_py_err)?;
    serialize(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (n, d = 2, blobs = 3, seed = 0))]
fn gaussian_blobs(n: usize, d: usize, blobs: usize, seed: u64) -> PyResult<PyPointSet> {
    Ok(PyPointSet {
        inner: io::gaussian_blobs(n, d, blobs, seed).map_err(to_py_err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (n, d = 2, seed = 0))]
fn uniform_points(n: usize, d: usize, seed: u64) -> PyResult<PyPointSet> {
    Ok(PyPointSet {
        inner: io::uniform_points(n, d, seed).map_err(to_py_err)?,
    })
}

/// Replays an operation log given as text and returns the final document.
#[pyfunction]
#[pyo3(signature = (ops_text, r, eps = 1.0))]
fn replay<'py>(py: Python<'py>, ops_text: &str, r: usize, eps: f64) -> PyResult<Bound<'py, PyAny>> {
    let ops = io::parse_ops_str(ops_text).map_err(to_py_err)?;
    serialize(py, &io::replay(&ops, r, eps).map_err(to_py_err)?)
}

/// Hierarchy of nets supporting insertions, deletions and approximate
/// nearest neighbor queries.
#[pyclass(name = "NavigatingNet", module = "rgather_py")]
struct PyNavigatingNet {
    inner: dynamic::NavigatingNet,
}

#[pymethods]
impl PyNavigatingNet {
    #[new]
    fn new(dim: usize) -> Self {
        PyNavigatingNet {
            inner: dynamic::NavigatingNet::new(dim),
        }
    }

    fn insert(&mut self, id: u64, coords: Vec<f64>) -> PyResult<()> {
        self.inner.insert(id, coords).map_err(to_py_err)
    }

    fn delete(&mut self, id: u64) -> PyResult<()> {
        self.inner.delete(id).map(|_| ()).map_err(to_py_err)
    }

    /// Id and distance of a point within `1 + eps` of the nearest distance.
    #[pyo3(signature = (q, eps = 0.1))]
    fn ann(&self, q: Vec<f64>, eps: f64) -> PyResult<(u64, f64)> {
        self.inner.ann(&q, eps).map_err(to_py_err)
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.inner.check_invariants().map_err(PyValueError::new_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: u64) -> bool {
        self.inner.contains(id)
    }
}

/// Fully dynamic r-gather under insertions and deletions.
#[pyclass(name = "DynRGather", module = "rgather_py")]
struct PyDynRGather {
    inner: dynamic::DynRGather,
}

#[pymethods]
impl PyDynRGather {
    #[new]
    #[pyo3(signature = (dim, r, eps = 1.0))]
    fn new(dim: usize, r: usize, eps: f64) -> PyResult<Self> {
        Ok(PyDynRGather {
            inner: dynamic::DynRGather::with_eps(dim, r, eps).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r()
    }

    /// Approximation factor `1 + eps` of the internal searches.
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    fn insert(&mut self, id: u64, coords: Vec<f64>) -> PyResult<()> {
        self.inner.insert(id, coords).map_err(to_py_err)
    }

    fn delete(&mut self, id: u64) -> PyResult<()> {
        self.inner.delete(id).map_err(to_py_err)
    }

    /// Center of `id` and a bound on the distance to it.
    fn query(&self, id: u64) -> PyResult<(u64, f64)> {
        let a = self.inner.query(id).map_err(to_py_err)?;
        Ok((a.center, a.radius_bound))
    }

    /// Clustering of all live points as a dictionary, with its radius bound.
    fn query_all<'py>(&self, py: Python<'py>) -> PyResult<(Bound<'py, PyAny>, f64)> {
        let (c, bound) = self.inner.query_all().map_err(to_py_err)?;
        Ok((serialize(py, &c)?, bound))
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.inner.check_invariants().map_err(PyValueError::new_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: u64) -> bool {
        self.inner.contains(id)
    }
}

#[pymodule]
fn rgather_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyPointSet>()?;
    m.add_class::<PyNavigatingNet>()?;
    m.add_class::<PyDynRGather>()?;
    m.add_function(wrap_pyfunction!(rgather_plain, m)?)?;
    m.add_function(wrap_pyfunction!(rgather_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(rgather_pointwise, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_opt_radius, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_points, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
