//! Text formats, JSON output, dataset generators and the operation-log
//! replayer used by the command-line tool.
//!
//! Point files start with a `dim=<d>` header followed by `id,x1,...,xd`
//! lines. Operation logs hold one of `I <id> <x1> ... <xd>`, `D <id>`,
//! `Q <id>` or `QALL` per line. Blank lines and lines starting with `#` are
//! ignored in both.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamic::DynRGather;
use crate::error::{Error, Result};
use crate::metric::{dist_unchecked, validate, Clustering, PointSet};
use crate::mpc::CostReport;
use crate::nn_graph::NeighborGraph;
use crate::rng::KeyedRng;

/// Version tag written at the top of every JSON document.
pub const SCHEMA: &str = "rgather/1";

fn is_skipped(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid number {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite coordinate {tok:?}"),
        });
    }
    Ok(v)
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid id {tok:?}"),
    })
}

/// Parses a point file held in memory.
pub fn parse_points_str(text: &str) -> Result<PointSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !is_skipped(l));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing dim=<d> header".into(),
    })?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or(Error::Parse {
            line: hline,
            msg: "expected header dim=<d> with d >= 1".into(),
        })?;
    let mut points = Vec::new();
    for (line, l) in lines {
        let toks: Vec<&str> = l.split(',').collect();
        if toks.len() != dim + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected an id and {dim} coordinates"),
            });
        }
        let id = parse_id(toks[0], line)?;
        let coords = toks[1..]
            .iter()
            .map(|t| parse_f64(t, line))
            .collect::<Result<Vec<_>>>()?;
        points.push((id, coords));
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    PointSet::new(dim, points)
}

/// Reads and parses a point file.
pub fn parse_points(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_points_str(&std::fs::read_to_string(path)?)
}

/// Serializes a point set in the point file format.
pub fn format_points(p: &PointSet) -> String {
    let mut out = format!("dim={}\n", p.dim());
    for (id, c) in p.iter() {
        let _ = write!(out, "{id}");
        for x in c {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// One operation of a dynamic trace.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Insert { id: u64, coords: Vec<f64> },
    Delete(u64),
    Query(u64),
    QueryAll,
}

/// Parses an operation log held in memory.
pub fn parse_ops_str(text: &str) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        if is_skipped(l) {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let op = match toks[0] {
            "I" if toks.len() >= 3 => Op::Insert {
                id: parse_id(toks[1], line)?,
                coords: toks[2..]
                    .iter()
                    .map(|t| parse_f64(t, line))
                    .collect::<Result<Vec<_>>>()?,
            },
            "I" => return Err(bad("insert needs an id and coordinates")),
            "D" | "Q" if toks.len() == 2 => {
                let id = parse_id(toks[1], line)?;
                if toks[0] == "D" {
                    Op::Delete(id)
                } else {
                    Op::Query(id)
                }
            }
            "D" | "Q" => return Err(bad("expected exactly one id")),
            "QALL" if toks.len() == 1 => Op::QueryAll,
            other => return Err(bad(&format!("unknown operation {other:?}"))),
        };
        ops.push(op);
    }
    Ok(ops)
}

/// Reads and parses an operation log.
pub fn parse_ops(path: impl AsRef<Path>) -> Result<Vec<Op>> {
    parse_ops_str(&std::fs::read_to_string(path)?)
}

/// Serializes operations in the log format.
pub fn format_ops(ops: &[Op]) -> String {
    let mut out = String::new();
    for op in ops {
        match op {
            Op::Insert { id, coords } => {
                let _ = write!(out, "I {id}");
                for x in coords {
                    let _ = write!(out, " {x}");
                }
            }
            Op::Delete(id) => {
                let _ = write!(out, "D {id}");
            }
            Op::Query(id) => {
                let _ = write!(out, "Q {id}");
            }
            Op::QueryAll => out.push_str("QALL"),
        }
        out.push('\n');
    }
    out
}

/// Total power cost of a solution under a given exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCost {
    pub k: u32,
    pub total: f64,
}

/// Result of a single query in a replayed trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryEvent {
    /// Position of the operation in the log, starting at 1.
    pub op: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// JSON document produced by the clustering commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringOutput {
    pub schema: String,
    pub r: usize,
    #[serde(rename = "R_used")]
    pub r_used: Option<f64>,
    #[serde(flatten)]
    pub clustering: Clustering,
    pub max_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_cost: Option<PowerCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<Vec<QueryEvent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_report: Option<CostReport>,
}

impl ClusteringOutput {
    /// Output for `sol` over `p`, with metrics recomputed from the points.
    pub fn new(p: &PointSet, r: usize, r_used: Option<f64>, mut sol: Clustering, k_pow: Option<u32>) -> Result<Self> {
        sol.normalize();
        let rep = validate(p, &sol, k_pow.unwrap_or(1))?;
        Ok(ClusteringOutput {
            schema: SCHEMA.to_string(),
            r,
            r_used,
            clustering: sol,
            max_radius: rep.max_radius,
            power_cost: k_pow.map(|k| PowerCost {
                k,
                total: rep.total_power_cost,
            }),
            radius_bound: None,
            queries: None,
            cost_report: None,
        })
    }
}

/// Pretty JSON with a trailing newline.
pub fn emit_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Edge list with a metadata header, one `u v` pair of ids per line.
pub fn export_edges(g: &NeighborGraph) -> String {
    let m = &g.meta;
    let mut out = format!(
        "# R={} r={} C={} mode={} seed={}\n",
        m.radius,
        m.r,
        m.c,
        m.mode.name(),
        m.seed
    );
    for (u, v) in g.id_edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Outcome of re-checking a solution document against its points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub max_radius: f64,
    pub min_cluster_size: usize,
    pub outliers: usize,
    pub problems: Vec<String>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Recomputes the metrics of a solution document and compares them with the
/// stored values; `max_outliers` bounds the outlier count when given.
pub fn verify(p: &PointSet, json: &str, r: usize, max_outliers: Option<usize>) -> Result<VerifyReport> {
    let doc: ClusteringOutput = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let k_pow = doc.power_cost.as_ref().map_or(1, |c| c.k);
    let rep = validate(p, &doc.clustering, k_pow)?;
    let mut problems = Vec::new();
    if doc.schema != SCHEMA {
        problems.push(format!("schema {:?} is not {SCHEMA}", doc.schema));
    }
    if rep.num_clusters > 0 && rep.min_cluster_size < r {
        problems.push(format!("a cluster has {} < r = {r} points", rep.min_cluster_size));
    }
    if !close(rep.max_radius, doc.max_radius) {
        problems.push(format!(
            "max_radius is {} but the document states {}",
            rep.max_radius, doc.max_radius
        ));
    }
    if let Some(pc) = &doc.power_cost {
        if !close(rep.total_power_cost, pc.total) {
            problems.push(format!(
                "power cost is {} but the document states {}",
                rep.total_power_cost, pc.total
            ));
        }
    }
    let allowed = max_outliers.unwrap_or(0);
    if rep.outlier_count > allowed {
        problems.push(format!("{} outliers exceed the budget {allowed}", rep.outlier_count));
    }
    Ok(VerifyReport {
        ok: problems.is_empty(),
        max_radius: rep.max_radius,
        min_cluster_size: rep.min_cluster_size,
        outliers: rep.outlier_count,
        problems,
    })
}

/// `n` points around `blobs` centers drawn uniformly in `[0, 100]^d`, with
/// unit standard deviation per coordinate. Ids run from 0.
pub fn gaussian_blobs(n: usize, d: usize, blobs: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 || blobs == 0 {
        return Err(Error::InvalidParameter("n, d and blobs must be positive".into()));
    }
    let mut rng = KeyedRng::new(seed, &[0x424c_4f42]);
    let centers: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..d).map(|_| rng.uniform_range(0.0, 100.0)).collect())
        .collect();
    let rows = (0..n)
        .map(|i| centers[i % blobs].iter().map(|c| c + rng.gaussian()).collect())
        .collect::<Vec<Vec<f64>>>();
    PointSet::from_rows(d, &rows)
}

/// `n` points uniform in `[0, 100]^d`.
pub fn uniform_points(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be positive".into()));
    }
    let mut rng = KeyedRng::new(seed, &[0x554e_4946]);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.uniform_range(0.0, 100.0)).collect())
        .collect();
    PointSet::from_rows(d, &rows)
}

/// Shape of a random dynamic trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSpec {
    pub ops: usize,
    pub max_live: usize,
    pub dim: usize,
    /// Side of the cube coordinates are drawn from.
    pub extent: f64,
    /// Minimum distance between a new point and every live point.
    pub min_separation: f64,
    /// Include query operations.
    pub queries: bool,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            ops: 300,
            max_live: 25,
            dim: 2,
            extent: 40.0,
            min_separation: 0.5,
            queries: true,
        }
    }
}

/// Random insert/delete/query trace over fresh ids; points keep the minimum
/// separation from every live point.
pub fn random_trace(spec: &TraceSpec, seed: u64) -> Vec<Op> {
    let mut rng = KeyedRng::new(seed, &[0x5452_4143]);
    let mut live: Vec<(u64, Vec<f64>)> = Vec::new();
    let mut next_id = 0u64;
    let mut ops = Vec::with_capacity(spec.ops);
    while ops.len() < spec.ops {
        let roll = rng.uniform();
        let want_insert = live.len() < 2 || (live.len() < spec.max_live && roll < 0.5);
        if want_insert {
            let mut placed = None;
            for _ in 0..1000 {
                let c: Vec<f64> = (0..spec.dim).map(|_| rng.uniform_range(0.0, spec.extent)).collect();
                if live.iter().all(|(_, q)| dist_unchecked(q, &c) >= spec.min_separation) {
                    placed = Some(c);
                    break;
                }
            }
            if let Some(c) = placed {
                live.push((next_id, c.clone()));
                ops.push(Op::Insert {
                    id: next_id,
                    coords: c,
                });
                next_id += 1;
                continue;
            }
        }
        if !spec.queries || roll < 0.8 {
            let k = rng.below(live.len() as u64) as usize;
            let (id, _) = live.swap_remove(k);
            ops.push(Op::Delete(id));
        } else if roll < 0.9 {
            let k = rng.below(live.len() as u64) as usize;
            ops.push(Op::Query(live[k].0));
        } else {
            ops.push(Op::QueryAll);
        }
    }
    ops
}

/// Replays a trace on a fresh fully dynamic structure. The document's
/// clustering is the last successful `QALL`; every query is also logged.
pub fn replay(ops: &[Op], r: usize, eps: f64) -> Result<ClusteringOutput> {
    let dim = ops
        .iter()
        .find_map(|op| match op {
            Op::Insert { coords, .. } => Some(coords.len()),
            _ => None,
        })
        .ok_or_else(|| Error::InvalidParameter("trace contains no insertion".into()))?;
    let mut s = DynRGather::with_eps(dim, r, eps)?;
    let mut events = Vec::new();
    let mut last: Option<(Clustering, f64, f64)> = None;
    for (k, op) in ops.iter().enumerate() {
        let at = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: k + 1,
                msg: other.to_string(),
            },
        };
        let mut ev = QueryEvent {
            op: k + 1,
            id: None,
            center: None,
            radius_bound: None,
            clusters: None,
            max_radius: None,
            error: None,
        };
        match op {
            Op::Insert { id, coords } => {
                s.insert(*id, coords.clone()).map_err(at)?;
                continue;
            }
            Op::Delete(id) => {
                s.delete(*id).map_err(at)?;
                continue;
            }
            Op::Query(id) => {
                ev.id = Some(*id);
                match s.query(*id) {
                    Ok(a) => {
                        ev.center = Some(a.center);
                        ev.radius_bound = Some(a.radius_bound);
                    }
                    Err(Error::UnknownId(_)) => return Err(at(Error::UnknownId(*id))),
                    Err(e) => ev.error = Some(e.to_string()),
                }
            }
            Op::QueryAll => match s.query_all() {
                Ok((c, bound)) => {
                    let pts = live_points(&s)?;
                    let rep = validate(&pts, &c, 1)?;
                    ev.clusters = Some(c.clusters.len());
                    ev.max_radius = Some(rep.max_radius);
                    ev.radius_bound = Some(bound);
                    last = Some((c, rep.max_radius, bound));
                }
                Err(e) => ev.error = Some(e.to_string()),
            },
        }
        events.push(ev);
    }
    let (mut clustering, max_radius, bound) = last.unwrap_or((Clustering::default(), 0.0, 0.0));
    clustering.normalize();
    Ok(ClusteringOutput {
        schema: SCHEMA.to_string(),
        r,
        r_used: None,
        clustering,
        max_radius,
        power_cost: None,
        radius_bound: Some(bound),
        queries: Some(events),
        cost_report: None,
    })
}

/// Live points of a dynamic structure as a point set.
pub fn live_points(s: &DynRGather) -> Result<PointSet> {
    let net = s.net();
    PointSet::new(
        net.dim(),
        net.ids()
            .map(|id| (id, net.coords(id).expect("live").to_vec()))
            .collect(),
    )
}
