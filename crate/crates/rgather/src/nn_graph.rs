//! Near-neighbor graphs: exact construction, the explicit and sparse LSH
//! constructions, squaring, and a brute-force verifier.
//!
//! A C-approximate (R,r)-near-neighbor graph has every edge of length at most
//! `C R`, and every vertex either has at least `r` vertices in its closed
//! neighborhood or is adjacent to every point within distance `R`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsh::{bucket_key, LshKey, LshParams};
use crate::metric::PointSet;
use crate::mpc::{CostLedger, Primitive, StepDescriptor};

/// Undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Graph with `n` isolated vertices.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph, dropping self-loops and duplicate edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge endpoint out of range");
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        Graph { adj }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, a) in self.adj.iter().enumerate() {
            for &v in a {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Hop distances from `src`, truncated at `limit` hops (`usize::MAX` for no limit).
    pub fn bfs(&self, src: usize, limit: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[src] = Some(0);
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            let du = dist[u].expect("queued vertices have a distance");
            if du == limit {
                continue;
            }
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    q.push_back(v);
                }
            }
        }
        dist
    }

    /// Sorted vertices within `k` hops of `v`, `v` included.
    pub fn ball(&self, v: usize, k: usize) -> Vec<usize> {
        self.bfs(v, k)
            .iter()
            .enumerate()
            .filter_map(|(u, d)| d.map(|_| u))
            .collect()
    }

    /// Explicit `k`-th power.
    pub fn power(&self, k: usize) -> Graph {
        let edges = (0..self.n()).flat_map(|v| self.ball(v, k).into_iter().map(move |u| (v, u)));
        Graph::from_edges(self.n(), edges)
    }

    /// Maximum closed-neighborhood size in `G^k` over `vs`.
    pub fn max_power_degree(&self, vs: &[usize], k: usize) -> usize {
        vs.iter().map(|&v| self.ball(v, k).len()).max().unwrap_or(0)
    }
}

/// How a near-neighbor graph was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    Exact,
    LshExplicit,
    LshSparse,
}

impl GraphMode {
    pub fn name(self) -> &'static str {
        match self {
            GraphMode::Exact => "exact",
            GraphMode::LshExplicit => "lsh_explicit",
            GraphMode::LshSparse => "lsh_sparse",
        }
    }

    /// Hop distance in the built graph that corresponds to one hop of the
    /// near-neighbor graph it certifies.
    pub fn hop_factor(self) -> usize {
        match self {
            GraphMode::LshSparse => 2,
            _ => 1,
        }
    }
}

/// Construction metadata carried by a [`NeighborGraph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub radius: f64,
    pub r: usize,
    pub c: f64,
    pub mode: GraphMode,
    pub seed: u64,
    /// Points whose key used at least one fallback cell, summed over draws.
    pub fallback_keys: usize,
}

/// A graph over the points of a [`PointSet`]; vertex `i` is the point at index `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    pub graph: Graph,
    pub ids: Vec<u64>,
    pub meta: GraphMeta,
}

impl NeighborGraph {
    /// Edge list in point ids.
    pub fn id_edges(&self) -> Vec<(u64, u64)> {
        self.graph
            .edges()
            .into_iter()
            .map(|(u, v)| (self.ids[u], self.ids[v]))
            .collect()
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter("R must be positive".into()));
    }
    Ok(())
}

/// Exact graph: an edge for every pair at distance at most `radius`.
pub fn build_exact(p: &PointSet, radius: f64, r: usize, ledger: &CostLedger) -> Result<NeighborGraph> {
    check_radius(radius)?;
    let n = p.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if p.d(i, j) <= radius {
                edges.push((i, j));
            }
        }
    }
    ledger.account(StepDescriptor::new(
        Primitive::Sort,
        "exact_edge_sort",
        (edges.len() + n) as u64,
    ));
    Ok(NeighborGraph {
        graph: Graph::from_edges(n, edges),
        ids: p.ids().to_vec(),
        meta: GraphMeta {
            radius,
            r,
            c: 1.0,
            mode: GraphMode::Exact,
            seed: 0,
            fallback_keys: 0,
        },
    })
}

/// Buckets of one key draw: sorted point indices per key.
fn buckets(
    p: &PointSet,
    params: &LshParams,
    radius: f64,
    seed: u64,
    draw: usize,
) -> Result<(Vec<Vec<usize>>, usize)> {
    let g = params.functions(p.dim(), seed, draw);
    let mut map: BTreeMap<LshKey, Vec<usize>> = BTreeMap::new();
    let mut fallbacks = 0;
    for i in 0..p.len() {
        let (key, fb) = bucket_key(&g, p.coords(i), radius)?;
        fallbacks += fb as usize;
        map.entry(key).or_default().push(i);
    }
    Ok((map.into_values().collect(), fallbacks))
}

fn check_lsh_args(radius: f64, c: f64) -> Result<()> {
    check_radius(radius)?;
    if !(c > 1.0) {
        return Err(Error::InvalidParameter("C must exceed 1 for LSH".into()));
    }
    Ok(())
}

/// Explicit LSH graph: in each of `s` key draws every point is joined to the
/// `r` smallest-id other points of its bucket.
pub fn build_lsh_explicit(
    p: &PointSet,
    radius: f64,
    r: usize,
    c: f64,
    seed: u64,
    ledger: &CostLedger,
) -> Result<NeighborGraph> {
    check_lsh_args(radius, c)?;
    let n = p.len();
    let params = LshParams::for_size(n, c);
    let mut edges = Vec::new();
    let mut fallbacks = 0;
    for draw in 0..params.s {
        let (bks, fb) = buckets(p, &params, radius, seed, draw)?;
        fallbacks += fb;
        for b in &bks {
            for &v in b {
                edges.extend(b.iter().filter(|&&u| u != v).take(r).map(|&u| (v, u)));
            }
        }
    }
    let draws = (params.s * n) as u64;
    ledger.account(StepDescriptor::new(Primitive::Map, "lsh_hash", draws));
    ledger.account(StepDescriptor::new(Primitive::Sort, "lsh_bucket_sort", draws));
    ledger.account(StepDescriptor::new(
        Primitive::Map,
        "lsh_connect",
        edges.len() as u64,
    ));
    ledger.account(StepDescriptor::new(
        Primitive::Dedup,
        "lsh_edge_dedup",
        edges.len() as u64,
    ));
    Ok(NeighborGraph {
        graph: Graph::from_edges(n, edges),
        ids: p.ids().to_vec(),
        meta: GraphMeta {
            radius,
            r,
            c,
            mode: GraphMode::LshExplicit,
            seed,
            fallback_keys: fallbacks,
        },
    })
}

/// Sparse LSH graph: in each key draw every point is joined to the smallest-id
/// point of its bucket. The square of the result is the near-neighbor graph.
pub fn build_lsh_sparse(
    p: &PointSet,
    radius: f64,
    c: f64,
    seed: u64,
    ledger: &CostLedger,
) -> Result<NeighborGraph> {
    check_lsh_args(radius, c)?;
    let n = p.len();
    let params = LshParams::for_size(n, c);
    let mut edges = Vec::new();
    let mut fallbacks = 0;
    for draw in 0..params.s {
        let (bks, fb) = buckets(p, &params, radius, seed, draw)?;
        fallbacks += fb;
        for b in &bks {
            let rep = b[0];
            edges.extend(b[1..].iter().map(|&v| (v, rep)));
        }
    }
    let draws = (params.s * n) as u64;
    ledger.account(StepDescriptor::new(Primitive::Map, "lsh_hash", draws));
    ledger.account(StepDescriptor::new(Primitive::Sort, "lsh_bucket_sort", draws));
    ledger.account(StepDescriptor::new(
        Primitive::Dedup,
        "lsh_edge_dedup",
        edges.len() as u64,
    ));
    Ok(NeighborGraph {
        graph: Graph::from_edges(n, edges),
        ids: p.ids().to_vec(),
        meta: GraphMeta {
            radius,
            r: 0,
            c,
            mode: GraphMode::LshSparse,
            seed,
            fallback_keys: fallbacks,
        },
    })
}

/// Explicit square of a graph; metadata is copied.
pub fn square(g: &NeighborGraph) -> NeighborGraph {
    NeighborGraph {
        graph: g.graph.power(2),
        ids: g.ids.clone(),
        meta: g.meta.clone(),
    }
}

/// A violated condition found by [`verify_definition3`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Def3Violation {
    /// Edge longer than `C_eff R`.
    LongEdge { u: u64, v: u64, length: f64 },
    /// Vertex with fewer than `r` closed neighbors that misses a point of its `R`-ball.
    Deficient { v: u64, closed_degree: usize, missing: u64 },
}

/// Outcome of [`verify_definition3`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Def3Report {
    pub ok: bool,
    pub violations: Vec<Def3Violation>,
    /// Longest edge divided by `R`; the empirical approximation factor.
    pub max_edge_ratio: f64,
}

/// Brute-force check of the near-neighbor graph conditions.
pub fn verify_definition3(
    p: &PointSet,
    g: &Graph,
    radius: f64,
    r: usize,
    c_eff: f64,
) -> Result<Def3Report> {
    if g.n() != p.len() {
        return Err(Error::InvalidParameter(
            "graph and point set sizes differ".into(),
        ));
    }
    let mut violations = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for (u, v) in g.edges() {
        let len = p.d(u, v);
        max_ratio = max_ratio.max(len / radius);
        if len > c_eff * radius {
            violations.push(Def3Violation::LongEdge {
                u: p.id(u),
                v: p.id(v),
                length: len,
            });
        }
    }
    for v in 0..p.len() {
        let closed = g.degree(v) + 1;
        if closed >= r {
            continue;
        }
        let missing = (0..p.len()).find(|&u| u != v && p.d(u, v) <= radius && !g.has_edge(u, v));
        if let Some(u) = missing {
            violations.push(Def3Violation::Deficient {
                v: p.id(v),
                closed_degree: closed,
                missing: p.id(u),
            });
        }
    }
    Ok(Def3Report {
        ok: violations.is_empty(),
        violations,
        max_edge_ratio: max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> PointSet {
        PointSet::from_1d(v).unwrap()
    }

    #[test]
    fn exact_examples() {
        let l = CostLedger::sink();
        let p = line(&[0.0, 1.0, 10.0, 11.0]);
        let g = build_exact(&p, 1.0, 2, &l).unwrap();
        assert_eq!(g.graph.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(build_exact(&p, 0.5, 2, &l).unwrap().graph.num_edges(), 0);
        assert_eq!(build_exact(&p, 11.0, 2, &l).unwrap().graph.num_edges(), 6);
        assert!(verify_definition3(&p, &g.graph, 1.0, 3, 1.0).unwrap().ok);
    }

    #[test]
    fn lsh_coincident_points_are_joined() {
        let l = CostLedger::sink();
        let p = PointSet::new(2, vec![(5, vec![1.0, 1.0]), (9, vec![1.0, 1.0])]).unwrap();
        let g = build_lsh_explicit(&p, 1.0, 2, 2.0, 1, &l).unwrap();
        assert!(g.graph.has_edge(0, 1));
        let s = build_lsh_sparse(&p, 1.0, 2.0, 1, &l).unwrap();
        assert!(s.graph.has_edge(0, 1));
        let z = build_lsh_explicit(&p, 1.0, 0, 2.0, 1, &l).unwrap();
        assert_eq!(z.graph.num_edges(), 0);
    }

    #[test]
    fn square_examples() {
        let path = NeighborGraph {
            graph: Graph::from_edges(3, [(0, 1), (1, 2)]),
            ids: vec![1, 2, 3],
            meta: GraphMeta {
                radius: 1.0,
                r: 1,
                c: 1.0,
                mode: GraphMode::Exact,
                seed: 0,
                fallback_keys: 0,
            },
        };
        assert!(square(&path).graph.has_edge(0, 2));
        let mut star = path.clone();
        star.graph = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        star.ids = vec![0, 1, 2, 3, 4];
        assert_eq!(square(&star).graph.num_edges(), 10);
        let mut empty = path;
        empty.graph = Graph::empty(3);
        assert_eq!(square(&empty).graph.num_edges(), 0);
    }

    #[test]
    fn verifier_flags_long_edges_and_deficits() {
        let p = line(&[0.0, 1.0, 10.0]);
        let g = Graph::from_edges(3, [(0, 2)]);
        let rep = verify_definition3(&p, &g, 1.0, 3, 2.0).unwrap();
        assert!(!rep.ok);
        assert!(rep
            .violations
            .contains(&Def3Violation::LongEdge { u: 0, v: 2, length: 10.0 }));
        assert!(rep.violations.iter().any(|v| matches!(
            v,
            Def3Violation::Deficient { v: 1, missing: 0, .. }
        )));
        assert_eq!(rep.max_edge_ratio, 10.0);
    }
}
