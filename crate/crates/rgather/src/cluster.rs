//! Offline r-gather pipelines: plain, with outliers, and with a pointwise
//! guarantee (which also bounds the total power cost), each driven by a
//! geometric scan over candidate scales.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use crate::nn_graph::GraphMode;

use crate::error::{Error, Result};
use crate::metric::{partition_dp, validate, Center, Cluster, Clustering, PointSet, ORACLE_CAP};
use crate::mpc::CostLedger;
use crate::nn_graph::{build_exact, build_lsh_explicit, build_lsh_sparse, NeighborGraph};
use crate::power_graph::{nearest_in_khop, ruling_set_power, truncated_explore};
use crate::rng::{derive_seed, KeyedRng};

/// Above this size the scale bounds are estimated from a sample.
pub const EXACT_BOUNDS_LIMIT: usize = 10_000;
const BOUNDS_SAMPLE: usize = 2_000;
/// Extra doubling phases allowed when LSH graphs leave points unclustered.
const EXTRA_PHASES: usize = 16;
const TAG_GRAPH: u64 = 0x4752_4150;
const TAG_RULE: u64 = 0x5255_4c53;

/// Options shared by the offline pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RGatherOptions {
    pub mode: GraphMode,
    /// Approximation factor of the LSH graphs; exact graphs use 1.
    pub c: f64,
    pub beta: usize,
    pub grid_ratio: f64,
    pub seed: u64,
}

impl Default for RGatherOptions {
    fn default() -> Self {
        RGatherOptions {
            mode: GraphMode::Exact,
            c: 2.0,
            beta: 1,
            grid_ratio: 2.0,
            seed: 0,
        }
    }
}

impl RGatherOptions {
    fn check(&self) -> Result<()> {
        if self.beta == 0 {
            return Err(Error::InvalidParameter("beta must be at least 1".into()));
        }
        if !(self.grid_ratio > 1.0) {
            return Err(Error::InvalidParameter("grid ratio must exceed 1".into()));
        }
        if self.mode != GraphMode::Exact && !(self.c > 1.0) {
            return Err(Error::InvalidParameter("C must exceed 1 for LSH modes".into()));
        }
        Ok(())
    }

    /// Approximation factor certified by the graph of one hop unit.
    pub fn c_eff(&self) -> f64 {
        match self.mode {
            GraphMode::Exact => 1.0,
            _ => self.c,
        }
    }
}

/// Geometric grid of candidate scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub lo: f64,
    pub hi: f64,
    pub ratio: f64,
    pub values: Vec<f64>,
    /// Set when the bounds come from a sample rather than all pairs.
    pub estimated: bool,
}

impl ScaleGrid {
    /// Grid from one ratio step below the smallest positive distance up to
    /// the first value reaching the largest distance. Starting below the
    /// smallest distance makes the first scale edgeless, which is what
    /// singleton clusters need when `r = 1`.
    pub fn new(p: &PointSet, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidParameter("grid ratio must exceed 1".into()));
        }
        let (bounds, estimated) = if p.len() > EXACT_BOUNDS_LIMIT {
            (sampled_bounds(p), true)
        } else {
            (p.min_max_distance(), false)
        };
        let Some((min_d, max_d)) = bounds else {
            return Ok(ScaleGrid {
                lo: 1.0,
                hi: 1.0,
                ratio,
                values: vec![1.0],
                estimated,
            });
        };
        let lo = min_d / ratio;
        let mut values = vec![lo];
        while *values.last().expect("non-empty") < max_d {
            let next = values.last().expect("non-empty") * ratio;
            values.push(next);
        }
        Ok(ScaleGrid {
            lo,
            hi: max_d,
            ratio,
            values,
            estimated,
        })
    }
}

/// Distance bounds from a seeded sample: the smallest positive distance seen
/// is halved, and the largest seen is doubled, which covers the diameter.
fn sampled_bounds(p: &PointSet) -> Option<(f64, f64)> {
    let mut rng = KeyedRng::new(0x5341_4d50_4c45, &[p.len() as u64]);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for _ in 0..BOUNDS_SAMPLE {
        let i = rng.below(p.len() as u64) as usize;
        for j in 0..p.len() {
            let d = p.d(i, j);
            if d > 0.0 {
                lo = lo.min(d);
            }
            hi = hi.max(d);
        }
    }
    lo.is_finite().then(|| (lo / 2.0, 2.0 * hi))
}

/// Near-neighbor graph at `radius` as built by the pipelines for these options.
pub fn neighbor_graph(
    p: &PointSet,
    r: usize,
    radius: f64,
    opts: &RGatherOptions,
    ledger: &CostLedger,
) -> Result<NeighborGraph> {
    let seed = derive_seed(opts.seed, &[TAG_GRAPH, radius.to_bits()]);
    match opts.mode {
        GraphMode::Exact => build_exact(p, radius, r, ledger),
        GraphMode::LshExplicit => build_lsh_explicit(p, radius, r, opts.c, seed, ledger),
        GraphMode::LshSparse => {
            let mut g = build_lsh_sparse(p, radius, opts.c, seed, ledger)?;
            g.meta.r = r;
            Ok(g)
        }
    }
}

fn rule_seed(opts: &RGatherOptions, radius: f64) -> u64 {
    derive_seed(opts.seed, &[TAG_RULE, radius.to_bits()])
}

/// Groups vertices by their assigned center; `None` entries are skipped.
fn group(p: &PointSet, centers: &[Option<usize>]) -> Vec<Cluster> {
    let mut by_center: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for (v, c) in centers.iter().enumerate() {
        if let Some(c) = c {
            by_center.entry(*c).or_default().push(p.id(v));
        }
    }
    by_center
        .into_iter()
        .map(|(c, members)| Cluster {
            center: Center::Point(p.id(c)),
            members,
        })
        .collect()
}

/// One scale of the plain pipeline: ruling set of the squared near-neighbor
/// graph, then assignment to the nearest center in hops. `None` when a point
/// is unreachable or a cluster is smaller than `r`.
pub fn rgather_at_scale(
    p: &PointSet,
    r: usize,
    radius: f64,
    opts: &RGatherOptions,
    ledger: &CostLedger,
) -> Result<Option<Clustering>> {
    opts.check()?;
    let g = neighbor_graph(p, r, radius, opts, ledger)?;
    let h = opts.mode.hop_factor();
    let all: Vec<usize> = (0..p.len()).collect();
    let s = ruling_set_power(&g.graph, &all, 2 * h, opts.beta, rule_seed(opts, radius), ledger);
    let near = nearest_in_khop(&g.graph, &s, 2 * opts.beta * h, ledger);
    if near.iter().any(Option::is_none) {
        return Ok(None);
    }
    let centers: Vec<Option<usize>> = near.iter().map(|x| x.map(|(c, _)| c)).collect();
    let clusters = group(p, &centers);
    if clusters.iter().any(|c| c.members.len() < r) {
        return Ok(None);
    }
    Ok(Some(Clustering {
        clusters,
        outliers: Vec::new(),
    }))
}

/// Result of a scale scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub clustering: Clustering,
    pub r_used: f64,
    pub grid: ScaleGrid,
    /// Scales tried, the successful one included.
    pub probes: usize,
}

fn check_r(p: &PointSet, r: usize) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Empty);
    }
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    Ok(())
}

/// Plain r-gather: the first grid scale at which [`rgather_at_scale`] succeeds.
pub fn rgather(p: &PointSet, r: usize, opts: &RGatherOptions, ledger: &CostLedger) -> Result<ScanResult> {
    check_r(p, r)?;
    opts.check()?;
    if r > p.len() {
        return Err(Error::Infeasible(format!(
            "r = {r} exceeds the number of points {}",
            p.len()
        )));
    }
    let grid = ScaleGrid::new(p, opts.grid_ratio)?;
    for (i, &radius) in grid.values.iter().enumerate() {
        if let Some(clustering) = rgather_at_scale(p, r, radius, opts, ledger)? {
            return Ok(ScanResult {
                clustering,
                r_used: radius,
                probes: i + 1,
                grid,
            });
        }
    }
    Err(Error::Infeasible("no grid scale produced a feasible clustering".into()))
}

/// Closed-neighborhood sizes in the near-neighbor graph certified by `g`,
/// capped at `cap`.
fn certified_degrees(g: &NeighborGraph, cap: usize, ledger: &CostLedger) -> Vec<usize> {
    match g.meta.mode.hop_factor() {
        1 => (0..g.graph.n()).map(|v| (g.graph.degree(v) + 1).min(cap)).collect(),
        h => {
            let all: Vec<usize> = (0..g.graph.n()).collect();
            let res = truncated_explore(&g.graph, &all, h, cap.saturating_sub(1), ledger);
            res.lists.iter().map(Vec::len).collect()
        }
    }
}

/// One scale of the outlier pipeline. `None` when fewer than `n - k_out`
/// points are assigned.
pub fn rgather_outliers_at_scale(
    p: &PointSet,
    r: usize,
    k_out: usize,
    radius: f64,
    opts: &RGatherOptions,
    ledger: &CostLedger,
) -> Result<Option<Clustering>> {
    opts.check()?;
    let n = p.len();
    let g = neighbor_graph(p, r, radius, opts, ledger)?;
    let h = opts.mode.hop_factor();
    let deg = certified_degrees(&g, r, ledger);
    let dense: Vec<usize> = (0..n).filter(|&v| deg[v] >= r).collect();
    let s = ruling_set_power(&g.graph, &dense, 2 * h, opts.beta, rule_seed(opts, radius), ledger);
    let near = nearest_in_khop(&g.graph, &s, 2 * opts.beta * h, ledger);
    let assigned = near.iter().filter(|x| x.is_some()).count();
    if assigned + k_out < n {
        return Ok(None);
    }
    let centers: Vec<Option<usize>> = near.iter().map(|x| x.map(|(c, _)| c)).collect();
    let clusters = group(p, &centers);
    if clusters.iter().any(|c| c.members.len() < r) {
        return Ok(None);
    }
    let outliers = (0..n).filter(|&v| near[v].is_none()).map(|v| p.id(v)).collect();
    Ok(Some(Clustering { clusters, outliers }))
}

/// r-gather with up to `k_out` outliers: the first grid scale assigning at
/// least `n - k_out` points.
pub fn rgather_outliers(
    p: &PointSet,
    r: usize,
    k_out: usize,
    opts: &RGatherOptions,
    ledger: &CostLedger,
) -> Result<ScanResult> {
    check_r(p, r)?;
    opts.check()?;
    let grid = ScaleGrid::new(p, opts.grid_ratio)?;
    for (i, &radius) in grid.values.iter().enumerate() {
        if let Some(clustering) = rgather_outliers_at_scale(p, r, k_out, radius, opts, ledger)? {
            return Ok(ScanResult {
                clustering,
                r_used: radius,
                probes: i + 1,
                grid,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no grid scale leaves at most {k_out} points unassigned"
    )))
}

/// What happened in one phase of the pointwise pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub radius: f64,
    /// Centers of the clusters opened in this phase.
    pub new_centers: Vec<u64>,
    /// Points that joined a cluster opened in an earlier phase.
    pub late_joins: Vec<u64>,
}

/// Result of [`rgather_pointwise`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseResult {
    pub clustering: Clustering,
    pub phases: Vec<PhaseRecord>,
}

/// r-gather in which every point's distance to its center is bounded by a
/// multiple of its own r-th nearest neighbor distance. Phases run over
/// doubling scales; each opens clusters around a ruling set of the dense,
/// not-yet-covered points and lets remaining dense points join adjacent
/// clusters.
pub fn rgather_pointwise(
    p: &PointSet,
    r: usize,
    opts: &RGatherOptions,
    ledger: &CostLedger,
) -> Result<PointwiseResult> {
    check_r(p, r)?;
    opts.check()?;
    let n = p.len();
    if r > n {
        return Err(Error::Infeasible(format!(
            "r = {r} exceeds the number of points {n}"
        )));
    }
    let grid = ScaleGrid::new(p, 2.0)?;
    let h = opts.mode.hop_factor();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut centers: Vec<usize> = Vec::new();
    let mut phases = Vec::new();
    let total = grid.values.len() + if opts.mode == GraphMode::Exact { 0 } else { EXTRA_PHASES };
    for i in 0..total {
        if owner.iter().all(Option::is_some) {
            break;
        }
        let radius = grid.lo * 2f64.powi(i as i32);
        let g = neighbor_graph(p, r, radius, opts, ledger)?;
        let deg = certified_degrees(&g, r, ledger);
        let dense: Vec<usize> = (0..n).filter(|&v| deg[v] >= r).collect();
        let clustered: Vec<usize> = (0..n).filter(|&v| owner[v].is_some()).collect();
        let near_old = nearest_in_khop(&g.graph, &clustered, h, ledger);
        let fresh: Vec<usize> = dense.iter().copied().filter(|&v| near_old[v].is_none()).collect();
        let s = ruling_set_power(&g.graph, &fresh, 2 * h, opts.beta, rule_seed(opts, radius), ledger);
        let near_s = nearest_in_khop(&g.graph, &s, 2 * opts.beta * h, ledger);
        let mut record = PhaseRecord {
            radius,
            new_centers: s.iter().map(|&c| p.id(c)).collect(),
            late_joins: Vec::new(),
        };
        let mut newly: Vec<Option<usize>> = vec![None; n];
        for v in 0..n {
            if owner[v].is_none() {
                if let Some((c, _)) = near_s[v] {
                    newly[v] = Some(c);
                }
            }
        }
        for &v in &dense {
            if owner[v].is_none() && newly[v].is_none() {
                if let Some((u, _)) = near_old[v] {
                    owner[v] = owner[u];
                    record.late_joins.push(p.id(v));
                }
            }
        }
        for v in 0..n {
            if let Some(c) = newly[v] {
                owner[v] = Some(c);
            }
        }
        centers.extend(s);
        phases.push(record);
    }
    let clusters = group(p, &owner);
    let outliers = (0..n).filter(|&v| owner[v].is_none()).map(|v| p.id(v)).collect();
    debug_assert!(centers.iter().all(|&c| owner[c] == Some(c)));
    Ok(PointwiseResult {
        clustering: Clustering { clusters, outliers },
        phases,
    })
}

/// Sum over clustered points of the distance to their center raised to `k_pow`.
pub fn total_power_cost(p: &PointSet, sol: &Clustering, k_pow: u32) -> Result<f64> {
    Ok(validate(p, sol, k_pow)?.total_power_cost)
}

/// Exact minimum total power cost over partitions into clusters of size at
/// least `r`, each centered at one of its members.
pub fn brute_force_opt_power_cost(p: &PointSet, r: usize, k_pow: u32) -> Result<f64> {
    if p.len() > ORACLE_CAP {
        return Err(Error::OracleCap {
            n: p.len(),
            cap: ORACLE_CAP,
        });
    }
    if p.is_empty() {
        return Err(Error::Empty);
    }
    let n = p.len();
    let mut cost = vec![0.0; 1 << n];
    for (mask, slot) in cost.iter_mut().enumerate().skip(1) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        *slot = members
            .iter()
            .map(|&c| members.iter().map(|&q| p.d(c, q).powi(k_pow as i32)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
    }
    let v = partition_dp(n, r.max(1), 0, &cost, |a, b| a + b);
    if v.is_infinite() {
        return Err(Error::Infeasible(format!(
            "no partition into clusters of size at least {r}"
        )));
    }
    Ok(v)
}
