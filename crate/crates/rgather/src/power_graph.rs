//! Subroutines on the power graph `G^k`: truncated neighborhood exploration,
//! k-hop nearest source search, degree estimation, maximal independent sets
//! (a sequential oracle and the sparsified randomized algorithm), dominating
//! sets and ruling sets.
//!
//! Vertices are the indices `0..n` of a [`Graph`]; every arbitrary choice
//! resolves to the smallest index. Paths in `G^k[V']` may pass through any
//! vertex of `G`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::mpc::{CostLedger, StepDescriptor};
use crate::nn_graph::Graph;
use crate::rng::KeyedRng;

const TAG_SAMPLE: u64 = 0x5341_4d50;
const TAG_MARK: u64 = 0x4d41_524b;
const TAG_DEGREE: u64 = 0x4445_4752;
const TAG_DOMINATE: u64 = 0x444f_4d53;
const TAG_RULING: u64 = 0x5255_4c45;

/// Sampling constant of the degree estimator.
pub const DEGREE_SAMPLING_CONSTANT: f64 = 4.0;
/// Sampling constant of the dominating set algorithm.
pub const DOMINATING_CONSTANT: f64 = 1.0;
/// Growth factor used by the ruling set composition.
pub const RULING_GROWTH: f64 = 2.0;

/// `ln n`, floored at 1 so sampling probabilities stay meaningful for tiny graphs.
fn log_n(n: usize) -> f64 {
    (n.max(1) as f64).ln().max(1.0)
}

fn mask(n: usize, vs: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in vs {
        m[v] = true;
    }
    m
}

/// Output of [`truncated_explore`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationResult {
    /// Sorted list per vertex, a subset of `S` within `k` hops.
    pub lists: Vec<Vec<usize>>,
    /// Set when the list was cut to `J+1` entries.
    pub truncated: Vec<bool>,
}

/// For every vertex, the members of `s` within `k` hops, cut to the `J+1`
/// smallest after each round.
pub fn truncated_explore(
    g: &Graph,
    s: &[usize],
    k: usize,
    j: usize,
    ledger: &CostLedger,
) -> ExplorationResult {
    let n = g.n();
    let in_s = mask(n, s);
    let mut lists: Vec<Vec<usize>> = (0..n)
        .map(|v| if in_s[v] { vec![v] } else { Vec::new() })
        .collect();
    for _ in 0..k {
        let next: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut acc = lists[v].clone();
                for &u in g.neighbors(v) {
                    acc.extend_from_slice(&lists[u]);
                }
                acc.sort_unstable();
                acc.dedup();
                acc.truncate(j + 1);
                acc
            })
            .collect();
        lists = next;
    }
    ledger.account(StepDescriptor::explore(
        "truncated_explore",
        (g.num_edges() + n) as u64,
        k as u64,
        j as u64,
    ));
    let truncated = lists.iter().map(|l| l.len() == j + 1).collect();
    ExplorationResult { lists, truncated }
}

/// For every vertex, the nearest member of `s` within `k` hops and its hop
/// distance; ties go to the smallest index.
pub fn nearest_in_khop(
    g: &Graph,
    s: &[usize],
    k: usize,
    ledger: &CostLedger,
) -> Vec<Option<(usize, usize)>> {
    let n = g.n();
    let mut label: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut frontier: Vec<usize> = Vec::new();
    for &v in s {
        label[v] = Some((v, 0));
        frontier.push(v);
    }
    frontier.sort_unstable();
    frontier.dedup();
    for d in 1..=k {
        let mut cand: Vec<Option<usize>> = vec![None; n];
        let mut next = Vec::new();
        for &u in &frontier {
            let src = label[u].expect("frontier vertices are labeled").0;
            for &w in g.neighbors(u) {
                if label[w].is_none() {
                    match cand[w] {
                        None => {
                            cand[w] = Some(src);
                            next.push(w);
                        }
                        Some(c) if src < c => cand[w] = Some(src),
                        _ => {}
                    }
                }
            }
        }
        for &w in &next {
            label[w] = Some((cand[w].expect("candidate recorded"), d));
        }
        next.sort_unstable();
        frontier = next;
    }
    ledger.account(StepDescriptor::bfs(
        "nearest_in_khop",
        (g.num_edges() + n) as u64,
        k as u64,
    ));
    label
}

/// Vertices whose `G^k` closed neighborhood is estimated to hold at least
/// `(1 - eta) r` vertices, by sampling and truncated exploration.
pub fn high_degree_vertices(
    g: &Graph,
    r: usize,
    k: usize,
    eta: f64,
    seed: u64,
    ledger: &CostLedger,
) -> Vec<usize> {
    let n = g.n();
    let p = (DEGREE_SAMPLING_CONSTANT * log_n(n) / (r.max(1) as f64 * eta * eta)).min(1.0);
    let sample: Vec<usize> = (0..n)
        .filter(|&v| KeyedRng::new(seed, &[TAG_DEGREE, v as u64]).bernoulli(p))
        .collect();
    let threshold = (1.0 - eta / 10.0) * p * r as f64;
    let j = threshold.ceil().max(0.0) as usize;
    let res = truncated_explore(g, &sample, k, j, ledger);
    (0..n)
        .filter(|&v| res.lists[v].len() as f64 >= threshold)
        .collect()
}

/// Sequential oracle: scans `order` and keeps a vertex when no kept vertex is
/// within `k` hops. The result is a maximal independent set of `G^k[order]`.
pub fn greedy_mis_power(g: &Graph, order: &[usize], k: usize) -> Vec<usize> {
    let n = g.n();
    let mut blocked = vec![false; n];
    let mut out = Vec::new();
    for &v in order {
        if blocked[v] {
            continue;
        }
        out.push(v);
        for u in g.ball(v, k) {
            blocked[u] = true;
        }
    }
    out
}

/// True when every pair of `s` is more than `k` hops apart.
pub fn is_independent_khop(g: &Graph, s: &[usize], k: usize) -> bool {
    let in_s = mask(g.n(), s);
    s.iter().all(|&v| {
        g.bfs(v, k)
            .iter()
            .enumerate()
            .all(|(u, d)| d.is_none() || u == v || !in_s[u])
    })
}

/// True when every vertex of `vprime` is within `k` hops of `s`.
pub fn is_maximal_khop(g: &Graph, vprime: &[usize], s: &[usize], k: usize) -> bool {
    dominates_within(g, vprime, s, k)
}

/// True when every vertex of `vs` is within `radius` hops of `s`.
pub fn dominates_within(g: &Graph, vs: &[usize], s: &[usize], radius: usize) -> bool {
    let near = nearest_in_khop(g, s, radius, &CostLedger::sink());
    vs.iter().all(|&v| near[v].is_some())
}

/// Parameters of the sparsified MIS algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisParams {
    /// Iterations per phase.
    pub r_phase: usize,
    /// Independent sampling copies per estimate, at most 64.
    pub r_s: usize,
    /// Total iterations before the greedy finish.
    pub t_iters: usize,
}

impl MisParams {
    /// Desk-scale parameters: `r_s = max(8, ceil(2 ln n))`, two iterations per
    /// phase and `ceil(30 ln(max_degree + 2))` iterations.
    pub fn desk(n: usize, max_degree: usize) -> Self {
        MisParams {
            r_phase: 2,
            r_s: ((2.0 * (n.max(1) as f64).ln()).ceil() as usize).max(8),
            t_iters: (30.0 * ((max_degree + 2) as f64).ln()).ceil() as usize,
        }
    }

    /// Sampled weight at which a vertex stalls for a phase.
    pub fn stall_threshold(&self) -> f64 {
        100.0 * 2f64.powi(4 * self.r_phase as i32) * self.r_s as f64
    }
}

/// Per-iteration record of the sparsified MIS, for invariant checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisTrace {
    pub params: Option<MisParams>,
    /// After iteration t: `(vertex, e)` for every vertex alive at its start,
    /// where the vertex's marking probability is `2^-e`.
    pub exponents: Vec<Vec<(usize, u32)>>,
    /// Vertices stalled during iteration t.
    pub stalled: Vec<Vec<usize>>,
    /// Vertices that joined during iteration t.
    pub joined: Vec<Vec<usize>>,
    /// Vertices left for the greedy finish.
    pub residual: Vec<usize>,
}

/// Maximal independent set of `G^k[vprime]` by the sparsified randomized
/// algorithm, finished greedily on whatever remains after `T` iterations.
pub fn sparsified_mis_power(
    g: &Graph,
    vprime: &[usize],
    k: usize,
    seed: u64,
    params: Option<MisParams>,
    ledger: &CostLedger,
) -> Vec<usize> {
    sparsified_mis_power_traced(g, vprime, k, seed, params, ledger).0
}

/// [`sparsified_mis_power`] that also returns the iteration trace.
pub fn sparsified_mis_power_traced(
    g: &Graph,
    vprime: &[usize],
    k: usize,
    seed: u64,
    params: Option<MisParams>,
    ledger: &CostLedger,
) -> (Vec<usize>, MisTrace) {
    let n = g.n();
    let mut vs: Vec<usize> = vprime.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let in_v = mask(n, &vs);
    // Closed G^k neighborhoods restricted to V'.
    let mut nbr: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &vs {
        nbr[v] = g.ball(v, k).into_iter().filter(|&u| in_v[u]).collect();
    }
    let max_deg = vs.iter().map(|&v| nbr[v].len()).max().unwrap_or(0);
    let mut prm = params.unwrap_or_else(|| MisParams::desk(n, max_deg));
    prm.r_s = prm.r_s.clamp(1, 64);
    prm.r_phase = prm.r_phase.max(1);
    let t_max = prm.t_iters.max(1) as u32;
    let threshold = prm.stall_threshold();

    let mut alive = in_v.clone();
    let mut exp = vec![1u32; n];
    let mut stalled = vec![false; n];
    let mut stalled_hit = vec![false; n];
    let mut joined = vec![false; n];
    let mut trace = MisTrace {
        params: Some(prm),
        ..MisTrace::default()
    };
    let mut out = Vec::new();

    for t in 1..=prm.t_iters {
        let live: Vec<usize> = vs.iter().copied().filter(|&v| alive[v]).collect();
        if live.is_empty() {
            break;
        }
        let pos = (t - 1) % prm.r_phase + 1;
        // Sampling copies with the previous probabilities.
        let mut bits = vec![0u64; n];
        for &u in &live {
            let mut rng = KeyedRng::new(seed, &[TAG_SAMPLE, u as u64, t as u64]);
            let p = 0.5f64.powi(exp[u] as i32);
            let mut b = 0u64;
            for j in 0..prm.r_s {
                if rng.bernoulli(p) {
                    b |= 1 << j;
                }
            }
            bits[u] = b;
        }
        let mut stalled_now = Vec::new();
        for &v in &live {
            let mut counts = vec![0usize; prm.r_s];
            for &u in &nbr[v] {
                if alive[u] {
                    for (j, c) in counts.iter_mut().enumerate() {
                        *c += (bits[u] >> j & 1) as usize;
                    }
                }
            }
            let total: usize = counts.iter().sum();
            counts.sort_unstable();
            let tau_hat = counts[(prm.r_s - 1) / 2];
            if pos == 1 && total as f64 >= threshold {
                stalled[v] = true;
            }
            if stalled[v] {
                stalled_now.push(v);
            }
            exp[v] = if tau_hat >= 2 || stalled[v] {
                (exp[v] + 1).min(t_max)
            } else {
                exp[v].saturating_sub(1).max(1)
            };
        }
        // Marking with the updated probabilities.
        let mut marked = vec![false; n];
        for &v in &live {
            if !stalled[v] {
                let mut rng = KeyedRng::new(seed, &[TAG_MARK, v as u64, t as u64]);
                marked[v] = rng.bernoulli(0.5f64.powi(exp[v] as i32));
            }
        }
        let mut joined_now = Vec::new();
        for &v in &live {
            if marked[v] && nbr[v].iter().all(|&u| u == v || !marked[u] || !alive[u]) {
                joined_now.push(v);
            }
        }
        let mut joined_t = vec![false; n];
        for &v in &joined_now {
            joined[v] = true;
            joined_t[v] = true;
            out.push(v);
        }
        for &v in &live {
            let hit = nbr[v].iter().any(|&u| joined_t[u]);
            if hit {
                if stalled[v] {
                    stalled_hit[v] = true;
                } else {
                    alive[v] = false;
                }
            }
        }
        trace
            .exponents
            .push(live.iter().map(|&v| (v, exp[v])).collect());
        trace.stalled.push(stalled_now);
        trace.joined.push(joined_now);
        if pos == prm.r_phase || t == prm.t_iters {
            for &v in &live {
                if stalled_hit[v] {
                    alive[v] = false;
                }
                stalled[v] = false;
                stalled_hit[v] = false;
            }
        }
    }

    let residual: Vec<usize> = vs.iter().copied().filter(|&v| alive[v] && !joined[v]).collect();
    let finish = greedy_mis_power(g, &residual, k);
    ledger.account(StepDescriptor::mis(
        "sparsified_mis",
        (g.num_edges() + n) as u64,
        n as u64,
        k as u64,
        max_deg as u64,
    ));
    ledger.account(StepDescriptor::finish(
        "mis_component_finish",
        residual.iter().map(|&v| nbr[v].len() as u64).sum(),
        n as u64,
    ));
    out.extend(finish);
    out.sort_unstable();
    trace.residual = residual;
    (out, trace)
}

/// Output of [`dominating_set_power`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominatingSet {
    /// Sorted dominating vertices.
    pub u: Vec<usize>,
    /// Graph on all vertices whose edges join members of `u` within `k` hops.
    pub induced: Graph,
    /// Members whose exploration list was cut, so some induced edges may be missing.
    pub truncated: usize,
}

/// A set `U` that `k`-dominates `vprime` together with `G^k[U]`, by
/// sampling at geometrically increasing rates.
pub fn dominating_set_power(
    g: &Graph,
    vprime: &[usize],
    k: usize,
    f: f64,
    seed: u64,
    ledger: &CostLedger,
) -> DominatingSet {
    let n = g.n();
    let ln_n = log_n(n);
    let mut remaining: Vec<usize> = vprime.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let delta = g.max_power_degree(&remaining, k).max(1) as f64;
    let iters = (delta.ln() / f.ln()).ceil().max(1.0) as usize;
    let j = (10.0 * DOMINATING_CONSTANT * f * ln_n).ceil() as usize;
    let mut u_all = Vec::new();
    let mut edges = Vec::new();
    let mut truncated = 0;
    for t in 1..=iters {
        if remaining.is_empty() {
            break;
        }
        let prob = (DOMINATING_CONSTANT * f.powi(t as i32) * ln_n / delta).min(1.0);
        let u_t: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&v| KeyedRng::new(seed, &[TAG_DOMINATE, v as u64, t as u64]).bernoulli(prob))
            .collect();
        let res = truncated_explore(g, &u_t, k, j, ledger);
        for &u in &u_t {
            truncated += res.truncated[u] as usize;
            edges.extend(res.lists[u].iter().map(|&w| (u, w)));
        }
        remaining.retain(|&v| res.lists[v].is_empty());
        u_all.extend(u_t);
    }
    u_all.sort_unstable();
    DominatingSet {
        u: u_all,
        induced: Graph::from_edges(n, edges),
        truncated,
    }
}

/// A `beta`-ruling set of `G^k[vprime]`: members pairwise more than `k` hops
/// apart, every vertex of `vprime` within `beta k` hops of a member.
pub fn ruling_set_power(
    g: &Graph,
    vprime: &[usize],
    k: usize,
    beta: usize,
    seed: u64,
    ledger: &CostLedger,
) -> Vec<usize> {
    assert!(beta >= 1, "beta must be at least 1");
    if beta == 1 {
        return sparsified_mis_power(g, vprime, k, seed, None, ledger);
    }
    let ds = dominating_set_power(
        g,
        vprime,
        k,
        RULING_GROWTH,
        crate::rng::derive_seed(seed, &[TAG_RULING, beta as u64]),
        ledger,
    );
    ruling_set_power(&ds.induced, &ds.u, 1, beta - 1, seed, ledger)
}

/// Sorted set of vertices within `k` hops of `s` (inclusive).
pub fn khop_cover(g: &Graph, s: &[usize], k: usize) -> BTreeSet<usize> {
    let near = nearest_in_khop(g, s, k, &CostLedger::sink());
    (0..g.n()).filter(|&v| near[v].is_some()).collect()
}
