//! Fully dynamic r-gather over a navigating net.
//!
//! For every scale `R` in the active window each net point `q` of `Y_R` keeps
//! a pre-cluster `Q_R(q)` of at most `r` points within `R/2`, and the points
//! in no pre-cluster form the free pool `U_R`, itself held in a navigating
//! net so that claims are approximate nearest neighbor searches. A query
//! picks the smallest scale whose pre-clusters all reach size `r`.

use std::collections::{BTreeMap, BTreeSet};

use super::net::NavigatingNet;
use super::{clustering_from, QueryAnswer};
use crate::error::{Error, Result};
use crate::metric::{dist_unchecked, Clustering};

/// Default slack of the internal nearest neighbor searches.
pub const DEFAULT_ANN_EPS: f64 = 1.0;

#[derive(Clone, Debug)]
struct ScaleState {
    pool: NavigatingNet,
    pre: BTreeMap<u64, BTreeSet<u64>>,
    owner: BTreeMap<u64, u64>,
}

impl ScaleState {
    fn singletons(dim: usize, points: impl IntoIterator<Item = u64>) -> Self {
        let mut st = ScaleState {
            pool: NavigatingNet::new(dim),
            pre: BTreeMap::new(),
            owner: BTreeMap::new(),
        };
        for q in points {
            st.pre.insert(q, BTreeSet::from([q]));
            st.owner.insert(q, q);
        }
        st
    }
}

#[derive(Clone, Debug)]
pub struct DynRGather {
    r: usize,
    eps: f64,
    net: NavigatingNet,
    states: BTreeMap<i32, ScaleState>,
    /// Refills that left a pre-cluster below its adequacy bound.
    refill_shortfalls: u64,
}

impl DynRGather {
    pub fn new(dim: usize, r: usize) -> Result<Self> {
        Self::with_eps(dim, r, DEFAULT_ANN_EPS)
    }

    /// Structure whose internal searches are `(1 + eps)`-approximate.
    pub fn with_eps(dim: usize, r: usize, eps: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        Ok(DynRGather {
            r,
            eps,
            net: NavigatingNet::new(dim),
            states: BTreeMap::new(),
            refill_shortfalls: 0,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Approximation factor of the internal searches.
    pub fn c(&self) -> f64 {
        1.0 + self.eps
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    pub fn net(&self) -> &NavigatingNet {
        &self.net
    }

    pub fn contains(&self, id: u64) -> bool {
        self.net.contains(id)
    }

    /// Single-point refills after a deletion that left a pre-cluster short of
    /// its adequacy bound, counted since construction.
    pub fn refill_shortfalls(&self) -> u64 {
        self.refill_shortfalls
    }

    /// Active scale window `[lo, hi]`: `Y_lo` is the whole point set and
    /// `Y_hi` shrinks to the root a factor `4 C'` below `hi`, with `C'` the
    /// smallest power of two at least `C`.
    pub fn window(&self) -> Option<(i32, i32)> {
        if self.net.len() <= 1 {
            return None;
        }
        let lo = self.net.min_top()?;
        let m = self.net.max_finite_top()?;
        let c_bar_log = self.c().log2().ceil().max(0.0) as i32;
        Some((lo, m + 3 + c_bar_log))
    }

    fn ensure_window(&mut self, lo: i32, hi: i32, old_points: &[u64]) {
        let dim = self.net.dim();
        if self.states.is_empty() {
            for i in lo..=hi {
                self.states
                    .insert(i, ScaleState::singletons(dim, old_points.iter().copied()));
            }
            return;
        }
        let olo = *self.states.keys().next().expect("non-empty");
        let ohi = *self.states.keys().next_back().expect("non-empty");
        for i in lo..olo.min(hi + 1) {
            self.states
                .insert(i, ScaleState::singletons(dim, old_points.iter().copied()));
        }
        for i in (ohi + 1).max(lo)..=hi {
            let top = self.states[&ohi].clone();
            self.states.insert(i, top);
        }
        self.states.retain(|&i, _| i >= lo && i <= hi);
    }

    fn pt(&self, id: u64) -> Vec<f64> {
        self.net.coords(id).expect("live point").to_vec()
    }

    /// Claims pool points for `x` while they lie within `R/2` and the
    /// pre-cluster has room.
    fn claim(st: &mut ScaleState, x: u64, xc: &[f64], r: usize, half: f64, eps: f64) -> Result<()> {
        while st.pre[&x].len() < r && !st.pool.is_empty() {
            let (y, d) = st.pool.ann(xc, eps)?;
            if d >= half {
                break;
            }
            st.pool.delete(y)?;
            st.pre.get_mut(&x).expect("pre-cluster").insert(y);
            st.owner.insert(y, x);
        }
        Ok(())
    }

    pub fn insert(&mut self, id: u64, coords: Vec<f64>) -> Result<()> {
        self.net.insert(id, coords.clone())?;
        if self.net.len() == 1 {
            self.states.clear();
            return Ok(());
        }
        let (lo, hi) = self.window().expect("two or more points");
        let old: Vec<u64> = self.net.ids().filter(|&x| x != id).collect();
        self.ensure_window(lo, hi, &old);
        let top = self.net.top(id).expect("inserted");
        let (r, eps) = (self.r, self.eps);
        for i in lo..=hi {
            let half = self.net.scale(i) / 2.0;
            let nearest = if top >= i {
                None
            } else {
                self.net.nearest_in_scale(&coords, i)
            };
            let st = self.states.get_mut(&i).expect("materialized");
            match nearest {
                None => {
                    st.pre.insert(id, BTreeSet::from([id]));
                    st.owner.insert(id, id);
                    Self::claim(st, id, &coords, r, half, eps)?;
                }
                Some((q, d)) => {
                    if d < half && st.pre[&q].len() < r {
                        st.pre.get_mut(&q).expect("pre-cluster").insert(id);
                        st.owner.insert(id, q);
                    } else {
                        st.pool.insert(id, coords.clone())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn delete(&mut self, id: u64) -> Result<()> {
        if !self.net.contains(id) {
            return Err(Error::UnknownId(id));
        }
        let del = self.net.delete(id)?;
        if self.net.len() <= 1 {
            self.states.clear();
            return Ok(());
        }
        let (lo, hi) = self.window().expect("two or more points");
        let live: Vec<u64> = self.net.ids().collect();
        self.ensure_window(lo, hi, &live);
        let (r, eps) = (self.r, self.eps);
        for i in lo..=hi {
            let radius = self.net.scale(i);
            let half = radius / 2.0;
            let promoted = del.promoted_at(i);
            let promoted_coords: Vec<Vec<f64>> = promoted.iter().map(|&x| self.pt(x)).collect();
            let mut coords_of = BTreeMap::new();
            let st = self.states.get_mut(&i).expect("materialized");
            if let Some(members) = st.pre.remove(&id) {
                for m in members {
                    st.owner.remove(&m);
                    if m != id {
                        let c = self.net.coords(m).expect("live point").to_vec();
                        st.pool.insert(m, c)?;
                    }
                }
            } else if st.pool.contains(id) {
                st.pool.delete(id)?;
            } else if let Some(q) = st.owner.remove(&id) {
                let set = st.pre.get_mut(&q).expect("pre-cluster");
                set.remove(&id);
                if set.len() < r && !st.pool.is_empty() {
                    let qc = coords_of
                        .entry(q)
                        .or_insert_with(|| self.net.coords(q).expect("live point").to_vec());
                    let (y, d) = st.pool.ann(qc, eps)?;
                    if d < half {
                        st.pool.delete(y)?;
                        st.pre.get_mut(&q).expect("pre-cluster").insert(y);
                        st.owner.insert(y, q);
                    }
                }
            }
            for (x, xc) in promoted.into_iter().zip(promoted_coords) {
                if st.pool.contains(x) {
                    st.pool.delete(x)?;
                } else if let Some(q) = st.owner.remove(&x) {
                    if let Some(s) = st.pre.get_mut(&q) {
                        s.remove(&x);
                    }
                }
                st.pre.insert(x, BTreeSet::from([x]));
                st.owner.insert(x, x);
                Self::claim(st, x, &xc, r, half, eps)?;
            }
        }
        self.refill_shortfalls += self.adequacy_violations().len() as u64;
        Ok(())
    }

    /// Smallest active scale at which every pre-cluster holds `r` points.
    fn feasible_scale(&self) -> Option<i32> {
        self.states
            .iter()
            .find(|(_, st)| st.pre.values().all(|s| s.len() >= self.r))
            .map(|(&i, _)| i)
    }

    fn center_at(&self, id: u64, i: i32) -> u64 {
        match self.states[&i].owner.get(&id) {
            Some(&q) => q,
            None => {
                let c = self.net.coords(id).expect("live point");
                self.net.nearest_in_scale(c, i).expect("non-empty").0
            }
        }
    }

    /// Center of `id` and the radius bound `2 C R*`.
    pub fn query(&self, id: u64) -> Result<QueryAnswer> {
        if !self.net.contains(id) {
            return Err(Error::UnknownId(id));
        }
        if self.net.len() == 1 {
            return if self.r <= 1 {
                Ok(QueryAnswer {
                    center: id,
                    radius_bound: 0.0,
                })
            } else {
                Err(Error::Infeasible("fewer than r live points".into()))
            };
        }
        let i = self
            .feasible_scale()
            .ok_or_else(|| Error::Infeasible("no active scale is feasible".into()))?;
        Ok(QueryAnswer {
            center: self.center_at(id, i),
            radius_bound: 2.0 * self.c() * self.net.scale(i),
        })
    }

    /// Clustering obtained by querying every live point, with its bound.
    pub fn query_all(&self) -> Result<(Clustering, f64)> {
        if self.net.is_empty() {
            return Err(Error::Empty);
        }
        if self.net.len() == 1 {
            let id = self.net.root().expect("non-empty");
            let a = self.query(id)?;
            return Ok((clustering_from([(id, a.center)]), a.radius_bound));
        }
        let i = self
            .feasible_scale()
            .ok_or_else(|| Error::Infeasible("no active scale is feasible".into()))?;
        let assign: Vec<(u64, u64)> = self.net.ids().map(|p| (p, self.center_at(p, i))).collect();
        Ok((clustering_from(assign), 2.0 * self.c() * self.net.scale(i)))
    }

    fn d(&self, a: u64, b: u64) -> f64 {
        dist_unchecked(self.net.coords(a).expect("live"), self.net.coords(b).expect("live"))
    }

    /// Checks partition, pre-cluster radius, size cap, pool completeness and
    /// bookkeeping at every active scale. Quadratic per scale.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.net.check_invariants()?;
        let Some((lo, hi)) = self.window() else {
            return if self.states.is_empty() {
                Ok(())
            } else {
                Err("states kept for at most one point".into())
            };
        };
        let keys: Vec<i32> = self.states.keys().copied().collect();
        if keys != (lo..=hi).collect::<Vec<_>>() {
            return Err(format!("materialized scales {keys:?} differ from [{lo}, {hi}]"));
        }
        let ids: Vec<u64> = self.net.ids().collect();
        for (&i, st) in &self.states {
            let radius = self.net.scale(i);
            let y = self.net.net_at(i);
            if st.pre.keys().copied().collect::<Vec<_>>() != y {
                return Err(format!("pre-cluster owners differ from Y_{i}"));
            }
            st.pool.check_invariants()?;
            let mut seen = BTreeSet::new();
            for (&q, s) in &st.pre {
                if !s.contains(&q) {
                    return Err(format!("Q_{i}({q}) misses its owner"));
                }
                if s.len() > self.r.max(1) {
                    return Err(format!("Q_{i}({q}) exceeds r"));
                }
                for &x in s {
                    if self.d(q, x) >= radius / 2.0 {
                        return Err(format!("{x} in Q_{i}({q}) lies too far"));
                    }
                    if st.owner.get(&x) != Some(&q) || !seen.insert(x) {
                        return Err(format!("ownership of {x} broken at {i}"));
                    }
                }
            }
            for x in st.pool.ids() {
                if !seen.insert(x) {
                    return Err(format!("{x} both pooled and claimed at {i}"));
                }
            }
            if seen.into_iter().collect::<Vec<_>>() != ids || st.owner.len() + st.pool.len() != ids.len() {
                return Err(format!("scale {i} does not partition the point set"));
            }
            for &p in &ids {
                if self.net.top(p).is_some_and(|t| t >= i) {
                    continue;
                }
                let far = y.iter().all(|&q| self.d(p, q) >= radius / 2.0);
                if far && !st.pool.contains(p) {
                    return Err(format!("{p} far from Y_{i} but not pooled"));
                }
            }
        }
        Ok(())
    }

    /// Pre-clusters smaller than `min(r, |{v : d(u, v) < R / (2C)}|)`.
    pub fn adequacy_violations(&self) -> Vec<String> {
        let ids: Vec<u64> = self.net.ids().collect();
        let mut out = Vec::new();
        for (&i, st) in &self.states {
            let bound = self.net.scale(i) / (2.0 * self.c());
            for (&q, s) in &st.pre {
                let near = ids.iter().filter(|&&v| self.d(q, v) < bound).count();
                if s.len() < self.r.min(near) {
                    out.push(format!("Q_{i}({q}) has {} of {}", s.len(), self.r.min(near)));
                }
            }
        }
        out
    }
}
