//! Insertion-only r-gather over a fixed ladder of scales `base * 2^i`.
//!
//! Each level keeps a net `N_i` of pairwise far points, a pre-cluster per net
//! point and a free pool `U_i`. Nets and pools are navigating nets, so every
//! membership test is an approximate nearest neighbor search.

use std::collections::{BTreeMap, BTreeSet};

use super::net::NavigatingNet;
use super::{clustering_from, QueryAnswer};
use crate::error::{Error, Result};
use crate::metric::{dist_unchecked, Clustering};

#[derive(Clone, Debug)]
struct Level {
    net: NavigatingNet,
    pool: NavigatingNet,
    pre: BTreeMap<u64, BTreeSet<u64>>,
    owner: BTreeMap<u64, u64>,
}

#[derive(Clone, Debug)]
pub struct IncrementalRGather {
    r: usize,
    eps: f64,
    base: f64,
    points: NavigatingNet,
    levels: Vec<Level>,
}

impl IncrementalRGather {
    /// Structure with scales `base * 2^i` for `i` in `0..=levels`; `base`
    /// should not exceed the smallest interpoint distance and the top scale
    /// should reach the diameter.
    pub fn new(dim: usize, r: usize, eps: f64, base: f64, levels: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        if !(eps > 0.0) || !(base > 0.0) {
            return Err(Error::InvalidParameter("eps and base must be positive".into()));
        }
        let level = Level {
            net: NavigatingNet::new(dim),
            pool: NavigatingNet::new(dim),
            pre: BTreeMap::new(),
            owner: BTreeMap::new(),
        };
        Ok(IncrementalRGather {
            r,
            eps,
            base,
            points: NavigatingNet::new(dim),
            levels: vec![level; levels + 1],
        })
    }

    pub fn c(&self) -> f64 {
        1.0 + self.eps
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn scale(&self, i: usize) -> f64 {
        self.base * 2f64.powi(i as i32)
    }

    pub fn insert(&mut self, id: u64, coords: Vec<f64>) -> Result<()> {
        self.points.insert(id, coords.clone())?;
        let (r, eps, c) = (self.r, self.eps, self.c());
        for i in 0..self.levels.len() {
            let s = self.scale(i);
            let lv = &mut self.levels[i];
            let nearest = if lv.net.is_empty() {
                None
            } else {
                Some(lv.net.ann(&coords, eps)?)
            };
            match nearest {
                Some((q, d)) if d <= 4.0 * c * c * s => {
                    if d <= 2.0 * c * s && lv.pre[&q].len() < r {
                        lv.pre.get_mut(&q).expect("pre-cluster").insert(id);
                        lv.owner.insert(id, q);
                    } else {
                        lv.pool.insert(id, coords.clone())?;
                    }
                }
                _ => {
                    lv.net.insert(id, coords.clone())?;
                    lv.pre.insert(id, BTreeSet::from([id]));
                    lv.owner.insert(id, id);
                    while lv.pre[&id].len() < r && !lv.pool.is_empty() {
                        let (y, dy) = lv.pool.ann(&coords, eps)?;
                        if dy > 2.0 * c * s {
                            break;
                        }
                        lv.pool.delete(y)?;
                        lv.pre.get_mut(&id).expect("pre-cluster").insert(y);
                        lv.owner.insert(y, id);
                    }
                }
            }
        }
        Ok(())
    }

    fn feasible_level(&self) -> Option<usize> {
        self.levels
            .iter()
            .position(|lv| lv.pre.values().all(|s| s.len() >= self.r))
    }

    fn center_at(&self, id: u64, i: usize) -> Result<u64> {
        let lv = &self.levels[i];
        match lv.owner.get(&id) {
            Some(&q) => Ok(q),
            None => Ok(lv.net.ann(self.points.coords(id).expect("live"), self.eps)?.0),
        }
    }

    /// Center of `id` and the radius bound `4 C^3 base 2^i*`.
    pub fn query(&self, id: u64) -> Result<QueryAnswer> {
        if !self.points.contains(id) {
            return Err(Error::UnknownId(id));
        }
        let i = self
            .feasible_level()
            .ok_or_else(|| Error::Infeasible("no level is feasible".into()))?;
        Ok(QueryAnswer {
            center: self.center_at(id, i)?,
            radius_bound: 4.0 * self.c().powi(3) * self.scale(i),
        })
    }

    /// Clustering obtained by querying every point, with its bound.
    pub fn query_all(&self) -> Result<(Clustering, f64)> {
        if self.points.is_empty() {
            return Err(Error::Empty);
        }
        let i = self
            .feasible_level()
            .ok_or_else(|| Error::Infeasible("no level is feasible".into()))?;
        let assign = self
            .points
            .ids()
            .map(|p| self.center_at(p, i).map(|c| (p, c)))
            .collect::<Result<Vec<_>>>()?;
        Ok((clustering_from(assign), 4.0 * self.c().powi(3) * self.scale(i)))
    }

    fn d(&self, a: u64, b: u64) -> f64 {
        dist_unchecked(self.points.coords(a).expect("live"), self.points.coords(b).expect("live"))
    }

    /// Checks net separation and coverage, pool completeness, pre-cluster
    /// radius and adequacy at every level. Quadratic per level.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let c = self.c();
        let ids: Vec<u64> = self.points.ids().collect();
        for (i, lv) in self.levels.iter().enumerate() {
            let s = self.scale(i);
            let net: Vec<u64> = lv.net.ids().collect();
            for (a, &u) in net.iter().enumerate() {
                for &v in &net[a + 1..] {
                    if self.d(u, v) <= 4.0 * c * s {
                        return Err(format!("N_{i} members {u}, {v} too close"));
                    }
                }
            }
            let mut seen = BTreeSet::new();
            for (&q, set) in &lv.pre {
                let near = ids.iter().filter(|&&v| self.d(q, v) <= 2.0 * s).count();
                if set.len() < self.r.min(near) {
                    return Err(format!("Q_{i}({q}) holds {} of {}", set.len(), self.r.min(near)));
                }
                for &x in set {
                    if self.d(q, x) > 2.0 * c * s || !seen.insert(x) {
                        return Err(format!("{x} misplaced in Q_{i}({q})"));
                    }
                }
            }
            for x in lv.pool.ids() {
                if !seen.insert(x) {
                    return Err(format!("{x} both pooled and claimed at {i}"));
                }
            }
            if seen.len() != ids.len() {
                return Err(format!("level {i} does not partition the point set"));
            }
            for &p in &ids {
                let dn = net.iter().map(|&q| self.d(p, q)).fold(f64::INFINITY, f64::min);
                if dn > 4.0 * c * c * s {
                    return Err(format!("{p} uncovered by N_{i}"));
                }
                if !lv.pre.contains_key(&p) && dn > 2.0 * c * s && !lv.pool.contains(p) {
                    return Err(format!("{p} far from N_{i} but not pooled"));
                }
            }
        }
        Ok(())
    }
}
