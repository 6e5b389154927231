//! Navigating nets: a hierarchy of R-nets over scales `alpha * 2^i` with
//! navigation lists linking each scale to the one below, supporting
//! insertion, deletion and approximate nearest neighbor search.
//!
//! A point's membership is stored as its top scale: it belongs to `Y_i` for
//! every `i <= top`. The root has an unbounded top. Only navigation lists
//! other than the trivial `{x}` are stored, alongside a reverse index from a
//! point to the lists that contain it.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::metric::dist_unchecked;

/// Distance function of the underlying metric space.
pub trait Metric: Clone + std::fmt::Debug {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64;
}

/// Euclidean distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Euclidean;

impl Metric for Euclidean {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        dist_unchecked(a, b)
    }
}

/// Top scale of the root, which belongs to every scale.
pub const ROOT_TOP: i32 = i32::MAX;

/// Points newly added to nets by a deletion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetDeletion {
    /// Scale index to the points promoted into `Y_i` at that scale.
    pub promoted: BTreeMap<i32, Vec<u64>>,
    /// A point that became the root, and the first scale it was added to
    /// without being listed in `promoted`.
    pub new_root: Option<(u64, i32)>,
}

impl NetDeletion {
    /// Points newly added to `Y_i`.
    pub fn promoted_at(&self, i: i32) -> Vec<u64> {
        let mut out = self.promoted.get(&i).cloned().unwrap_or_default();
        if let Some((x, from)) = self.new_root {
            if i >= from && !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct NavigatingNet<M: Metric = Euclidean> {
    metric: M,
    dim: usize,
    alpha: f64,
    coords: BTreeMap<u64, Vec<f64>>,
    top: BTreeMap<u64, i32>,
    root: Option<u64>,
    finite_tops: BTreeMap<i32, usize>,
    lists: BTreeMap<u64, BTreeMap<i32, Vec<u64>>>,
    reverse: BTreeMap<u64, BTreeSet<(u64, i32)>>,
    list_scales: BTreeMap<i32, usize>,
}

impl NavigatingNet<Euclidean> {
    /// Empty Euclidean net with base scale 1.
    pub fn new(dim: usize) -> Self {
        Self::with_metric(dim, 1.0, Euclidean).expect("base scale 1 is valid")
    }
}

impl<M: Metric> NavigatingNet<M> {
    /// Empty net over `metric` with base scale `alpha` in (1/2, 1].
    pub fn with_metric(dim: usize, alpha: f64, metric: M) -> Result<Self> {
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(Error::InvalidParameter("base scale must lie in (1/2, 1]".into()));
        }
        Ok(NavigatingNet {
            metric,
            dim,
            alpha,
            coords: BTreeMap::new(),
            top: BTreeMap::new(),
            root: None,
            finite_tops: BTreeMap::new(),
            lists: BTreeMap::new(),
            reverse: BTreeMap::new(),
            list_scales: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.coords.contains_key(&id)
    }

    pub fn coords(&self, id: u64) -> Option<&[f64]> {
        self.coords.get(&id).map(Vec::as_slice)
    }

    /// Ids in increasing order.
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.coords.keys().copied()
    }

    pub fn root(&self) -> Option<u64> {
        self.root
    }

    /// Radius of scale index `i`.
    pub fn scale(&self, i: i32) -> f64 {
        self.alpha * 2f64.powi(i)
    }

    /// Largest scale index at which `id` is a net point.
    pub fn top(&self, id: u64) -> Option<i32> {
        self.top.get(&id).copied()
    }

    /// Largest top scale among non-root points.
    pub fn max_finite_top(&self) -> Option<i32> {
        self.finite_tops.keys().next_back().copied()
    }

    /// Largest scale index `i` with `Y_i` equal to the whole point set.
    pub fn min_top(&self) -> Option<i32> {
        match self.finite_tops.keys().next() {
            Some(&t) => Some(t),
            None => self.root.map(|_| ROOT_TOP),
        }
    }

    /// Members of `Y_i` in increasing id order.
    pub fn net_at(&self, i: i32) -> Vec<u64> {
        self.top
            .iter()
            .filter(|(_, &t)| t >= i)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Navigation list `L_{x,i}`; `x` must belong to `Y_i`.
    pub fn list(&self, x: u64, i: i32) -> Vec<u64> {
        self.lists
            .get(&x)
            .and_then(|m| m.get(&i))
            .cloned()
            .unwrap_or_else(|| vec![x])
    }

    fn count_ge(&self, i: i32) -> usize {
        self.finite_tops.range(i..).map(|(_, c)| c).sum::<usize>() + usize::from(self.root.is_some())
    }

    fn pt(&self, id: u64) -> &[f64] {
        &self.coords[&id]
    }

    fn d(&self, a: u64, b: u64) -> f64 {
        self.metric.dist(self.pt(a), self.pt(b))
    }

    fn dq(&self, q: &[f64], id: u64) -> f64 {
        self.metric.dist(q, self.pt(id))
    }

    fn set_top(&mut self, id: u64, t: i32) {
        if let Some(old) = self.top.insert(id, t) {
            self.drop_finite(old);
        }
        if t != ROOT_TOP {
            *self.finite_tops.entry(t).or_default() += 1;
        }
    }

    fn drop_finite(&mut self, t: i32) {
        if t == ROOT_TOP {
            return;
        }
        let c = self.finite_tops.get_mut(&t).expect("tracked top");
        *c -= 1;
        if *c == 0 {
            self.finite_tops.remove(&t);
        }
    }

    /// Replaces `L_{x,i}`, keeping the reverse index and scale counts in sync.
    fn set_list(&mut self, x: u64, i: i32, mut list: Vec<u64>) {
        list.sort_unstable();
        list.dedup();
        if let Some(old) = self.lists.get_mut(&x).and_then(|m| m.remove(&i)) {
            for z in old {
                if let Some(r) = self.reverse.get_mut(&z) {
                    r.remove(&(x, i));
                }
            }
            let c = self.list_scales.get_mut(&i).expect("tracked scale");
            *c -= 1;
            if *c == 0 {
                self.list_scales.remove(&i);
            }
        }
        if list.len() <= 1 {
            if self.lists.get(&x).is_some_and(BTreeMap::is_empty) {
                self.lists.remove(&x);
            }
            return;
        }
        for &z in &list {
            self.reverse.entry(z).or_default().insert((x, i));
        }
        *self.list_scales.entry(i).or_default() += 1;
        self.lists.entry(x).or_default().insert(i, list);
    }

    fn add_to_list(&mut self, x: u64, i: i32, z: u64) {
        let mut l = self.list(x, i);
        if !l.contains(&z) {
            l.push(z);
            self.set_list(x, i, l);
        }
    }

    fn remove_from_list(&mut self, x: u64, i: i32, z: u64) {
        let mut l = self.list(x, i);
        l.retain(|&y| y != z);
        if l.is_empty() {
            l.push(x);
        }
        self.set_list(x, i, l);
    }

    /// Smallest scale index at which `Y_i` is the root alone and the root
    /// lies within `R_i` of `q`, strictly.
    fn start_scale(&self, q: &[f64]) -> i32 {
        let root = self.root.expect("non-empty net");
        let d = self.dq(q, root);
        let above_tops = self.max_finite_top().map_or(i32::MIN, |m| m + 1);
        if d == 0.0 {
            return above_tops;
        }
        let mut i = (d / self.alpha).log2().floor() as i32;
        while self.scale(i) <= d {
            i += 1;
        }
        while self.scale(i - 1) > d {
            i -= 1;
        }
        i.max(above_tops)
    }

    /// Top-down descent collecting `Z_i = {x in Y_i : d(x, q) <= factor R_i}`
    /// from scale `from` down to `to`, stopping early at an empty level.
    /// With `reject_zero`, a point at distance zero aborts the descent.
    fn descent(
        &self,
        q: &[f64],
        factor: f64,
        from: i32,
        to: i32,
        reject_zero: bool,
    ) -> std::result::Result<BTreeMap<i32, Vec<u64>>, u64> {
        let mut out = BTreeMap::new();
        let root = self.root.expect("non-empty net");
        let mut z: Vec<u64> = if self.dq(q, root) <= factor * self.scale(from) {
            vec![root]
        } else {
            Vec::new()
        };
        let mut i = from;
        loop {
            if reject_zero {
                if let Some(&x) = z.iter().find(|&&x| self.dq(q, x) == 0.0) {
                    return Err(x);
                }
            }
            if z.is_empty() {
                break;
            }
            out.insert(i, z.clone());
            if i <= to {
                break;
            }
            let bound = factor * self.scale(i - 1);
            let mut next: BTreeSet<u64> = BTreeSet::new();
            for &y in &z {
                for x in self.list(y, i) {
                    if self.dq(q, x) <= bound {
                        next.insert(x);
                    }
                }
            }
            z = next.into_iter().collect();
            i -= 1;
        }
        Ok(out)
    }

    /// Inserts a point. Fails on a duplicate id, a wrong dimension or a
    /// point coinciding with an existing one.
    pub fn insert(&mut self, id: u64, coords: Vec<f64>) -> Result<()> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        if self.contains(id) {
            return Err(Error::DuplicateId(id));
        }
        if self.is_empty() {
            self.coords.insert(id, coords);
            self.set_top(id, ROOT_TOP);
            self.root = Some(id);
            return Ok(());
        }
        let i_max = self.start_scale(&coords);
        let z = self
            .descent(&coords, 8.0, i_max, i32::MIN, true)
            .map_err(|existing| Error::CoincidentPoint { id, existing })?;
        let i_min = *z.keys().next().expect("root within range") - 1;
        let near = |i: i32| -> f64 {
            z.get(&i).map_or(f64::INFINITY, |zs| {
                zs.iter().map(|&x| self.dq(&coords, x)).fold(f64::INFINITY, f64::min)
            })
        };
        // Separation must hold at every scale up to the new top, so take the
        // longest run of far scales starting from the empty level.
        let hat = (i_min..=i_max)
            .take_while(|&i| near(i) >= self.scale(i))
            .last()
            .expect("the lowest level is empty");
        self.coords.insert(id, coords);
        self.set_top(id, hat);
        for i in i_min + 1..=hat + 1 {
            let four_r = 4.0 * self.scale(i);
            for &x in z.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                if self.d(x, id) <= four_r {
                    self.add_to_list(x, i, id);
                }
            }
        }
        for i in i_min + 1..=hat {
            if let Some(below) = z.get(&(i - 1)) {
                let mut l = below.clone();
                l.push(id);
                self.set_list(id, i, l);
            }
        }
        Ok(())
    }

    /// Deletes a point and reports the points promoted into higher nets.
    pub fn delete(&mut self, id: u64) -> Result<NetDeletion> {
        if !self.contains(id) {
            return Err(Error::UnknownId(id));
        }
        if self.len() == 1 {
            *self = Self::with_metric(self.dim, self.alpha, self.metric.clone())?;
            return Ok(NetDeletion::default());
        }
        let old_top = self.top[&id];
        let old_root = self.root.expect("non-empty net");
        let p = self.coords[&id].clone();
        let p_lists = self.lists.get(&id).cloned().unwrap_or_default();
        let mut out = NetDeletion::default();
        if let Some(&i_min) = p_lists.keys().next() {
            // Old-net neighborhoods of p, wide enough for every repair below.
            let start = self.start_scale(&p);
            let b = self
                .descent(&p, 16.0, start, i_min - 1, false)
                .expect("zero distances allowed");
            let near = |j: i32| -> Vec<u64> {
                let v = if j > start {
                    vec![old_root]
                } else {
                    b.get(&j).cloned().unwrap_or_default()
                };
                v.into_iter().filter(|&x| x != id).collect()
            };
            self.drop_finite(old_top);
            self.top.remove(&id);
            if old_root == id {
                self.root = None;
            }
            let mut z_prev: Vec<u64> = Vec::new();
            let mut i = i_min;
            loop {
                let p_in = old_top >= i;
                if z_prev.is_empty() && !p_in {
                    break;
                }
                if z_prev.len() == 1 && self.count_ge(i - 1) == 1 {
                    let x = z_prev[0];
                    self.set_top(x, ROOT_TOP);
                    self.root = Some(x);
                    out.new_root = Some((x, i));
                    break;
                }
                let r = self.scale(i);
                let mut cands: BTreeSet<u64> = z_prev.iter().copied().collect();
                if p_in {
                    if let Some(l) = p_lists.get(&i) {
                        cands.extend(l.iter().copied().filter(|&x| x != id));
                    }
                }
                let b_i = near(i);
                let mut z_cur: Vec<u64> = Vec::new();
                for x in cands {
                    if self.top[&x] >= i {
                        continue;
                    }
                    if b_i.iter().chain(&z_cur).any(|&y| self.d(x, y) < r) {
                        continue;
                    }
                    self.set_top(x, i);
                    z_cur.push(x);
                }
                let b_prev = near(i - 1);
                for &x in &z_cur {
                    let l: Vec<u64> = b_prev
                        .iter()
                        .chain(&z_prev)
                        .copied()
                        .filter(|&y| self.d(x, y) <= 4.0 * r)
                        .collect();
                    self.set_list(x, i, l);
                }
                let b_next = near(i + 1);
                for &x in &z_cur {
                    for &y in &b_next {
                        if self.d(x, y) <= 8.0 * r {
                            self.add_to_list(y, i + 1, x);
                        }
                    }
                }
                if !z_cur.is_empty() {
                    out.promoted.insert(i, z_cur.clone());
                }
                z_prev = z_cur;
                i += 1;
            }
        } else {
            self.drop_finite(old_top);
            self.top.remove(&id);
        }
        debug_assert!(self.root.is_some());
        let holders: Vec<(u64, i32)> = self
            .reverse
            .get(&id)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for (x, i) in holders {
            if x != id {
                self.remove_from_list(x, i, id);
            }
        }
        for i in p_lists.keys().copied().collect::<Vec<_>>() {
            self.set_list(id, i, Vec::new());
        }
        self.reverse.remove(&id);
        self.lists.remove(&id);
        self.coords.remove(&id);
        Ok(out)
    }

    fn argmin(&self, q: &[f64], z: &[u64]) -> (u64, f64) {
        z.iter()
            .map(|&x| (x, self.dq(q, x)))
            .fold((u64::MAX, f64::INFINITY), |best, c| {
                if c.1 < best.1 || (c.1 == best.1 && c.0 < best.0) {
                    c
                } else {
                    best
                }
            })
    }

    fn has_lists_at_or_below(&self, x: u64, i: i32) -> bool {
        self.lists
            .get(&x)
            .is_some_and(|m| m.range(..=i).next().is_some())
    }

    fn refine(&self, q: &[f64], z: &[u64], i: i32, dz: f64) -> Vec<u64> {
        let bound = dz + self.scale(i);
        let mut next: BTreeSet<u64> = BTreeSet::new();
        for &y in z {
            for x in self.list(y, i) {
                if self.dq(q, x) <= bound {
                    next.insert(x);
                }
            }
        }
        next.into_iter().collect()
    }

    /// A `(1 + eps)`-approximate nearest neighbor of `q` and its distance.
    pub fn ann(&self, q: &[f64], eps: f64) -> Result<(u64, f64)> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        let root = self.root.ok_or(Error::Empty)?;
        let Some(m) = self.max_finite_top() else {
            return Ok((root, self.dq(q, root)));
        };
        let lowest_list = self.list_scales.keys().next().copied();
        let mut i = m + 1;
        let mut z = vec![root];
        loop {
            let (best, dz) = self.argmin(q, &z);
            if 2.0 * self.scale(i) * (1.0 + 1.0 / eps) <= dz
                || (z.len() == 1 && !self.has_lists_at_or_below(best, i))
                || lowest_list.is_none_or(|s| i < s)
            {
                return Ok((best, dz));
            }
            z = self.refine(q, &z, i, dz);
            i -= 1;
        }
    }

    /// Exact nearest neighbor of `q` among the members of `Y_j`.
    pub fn nearest_in_scale(&self, q: &[f64], j: i32) -> Option<(u64, f64)> {
        let root = self.root?;
        let Some(m) = self.max_finite_top() else {
            return Some((root, self.dq(q, root)));
        };
        if j > m {
            return Some((root, self.dq(q, root)));
        }
        let mut i = m + 1;
        let mut z = vec![root];
        while i > j {
            let (_, dz) = self.argmin(q, &z);
            z = self.refine(q, &z, i, dz);
            i -= 1;
        }
        let (_, dz) = self.argmin(q, &z);
        let below: Vec<u64> = self
            .refine(q, &z, j, dz)
            .into_iter()
            .filter(|&x| self.top[&x] >= j)
            .collect();
        Some(self.argmin(q, &below))
    }

    /// Checks every net invariant by brute force over all scales where the
    /// structure is not trivially constant. Quadratic per scale.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let ids: Vec<u64> = self.ids().collect();
        if ids.is_empty() {
            return if self.top.is_empty() && self.lists.is_empty() && self.root.is_none() {
                Ok(())
            } else {
                Err("empty net holds stale state".into())
            };
        }
        let roots: Vec<u64> = self
            .top
            .iter()
            .filter(|(_, &t)| t == ROOT_TOP)
            .map(|(&x, _)| x)
            .collect();
        if roots.len() != 1 || self.root != Some(roots[0]) {
            return Err(format!("root mismatch: {roots:?} vs {:?}", self.root));
        }
        if self.top.len() != ids.len() {
            return Err("top map out of sync".into());
        }
        let mut tops = BTreeMap::new();
        for &t in self.top.values() {
            if t != ROOT_TOP {
                *tops.entry(t).or_insert(0usize) += 1;
            }
        }
        if tops != self.finite_tops {
            return Err("top counts out of sync".into());
        }
        let mut rev: BTreeMap<u64, BTreeSet<(u64, i32)>> = BTreeMap::new();
        let mut scales: BTreeMap<i32, usize> = BTreeMap::new();
        for (&x, m) in &self.lists {
            if !self.contains(x) {
                return Err(format!("lists kept for absent point {x}"));
            }
            for (&i, l) in m {
                if l.len() <= 1 {
                    return Err(format!("trivial list stored for {x} at {i}"));
                }
                *scales.entry(i).or_default() += 1;
                for &z in l {
                    rev.entry(z).or_default().insert((x, i));
                }
            }
        }
        rev.retain(|_, s| !s.is_empty());
        let mut stored = self.reverse.clone();
        stored.retain(|_, s| !s.is_empty());
        if rev != stored {
            return Err("reverse index out of sync".into());
        }
        if scales != self.list_scales {
            return Err("list scale counts out of sync".into());
        }
        if ids.len() == 1 {
            return if self.lists.is_empty() {
                Ok(())
            } else {
                Err("single point with lists".into())
            };
        }
        let mut min_d = f64::INFINITY;
        for (a, &x) in ids.iter().enumerate() {
            for &y in &ids[a + 1..] {
                min_d = min_d.min(self.d(x, y));
            }
        }
        let lo = (min_d / self.alpha).log2().floor() as i32 - 3;
        let hi = self.max_finite_top().unwrap_or(lo) + 2;
        if let (Some(&a), Some(&b)) = (self.list_scales.keys().next(), self.list_scales.keys().next_back()) {
            if a < lo || b > hi {
                return Err(format!("lists outside scale window [{lo}, {hi}]"));
            }
        }
        for i in lo..=hi {
            let r = self.scale(i);
            let y = self.net_at(i);
            let y_below = self.net_at(i - 1);
            if r <= min_d && y.len() != ids.len() {
                return Err(format!("Y_{i} misses points below the minimum distance"));
            }
            for (a, &u) in y.iter().enumerate() {
                for &v in &y[a + 1..] {
                    if self.d(u, v) < r {
                        return Err(format!("separation fails at {i}: {u}, {v}"));
                    }
                }
            }
            for &z in &y_below {
                if !y.iter().any(|&u| self.d(u, z) < r) {
                    return Err(format!("{z} in Y_{} uncovered at {i}", i - 1));
                }
            }
            for &p in &ids {
                if !y.iter().any(|&u| self.d(u, p) < 2.0 * r) {
                    return Err(format!("{p} not within 2R of Y_{i}"));
                }
            }
            for &x in &y {
                let expect: Vec<u64> = y_below
                    .iter()
                    .copied()
                    .filter(|&z| self.d(x, z) <= 4.0 * r)
                    .collect();
                let got = self.list(x, i);
                if got != expect {
                    return Err(format!("L_{{{x},{i}}} is {got:?}, expected {expect:?}"));
                }
            }
        }
        for (&x, m) in &self.lists {
            if let Some((&i, _)) = m.iter().next_back() {
                if self.top[&x] < i {
                    return Err(format!("list of {x} above its top scale"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net_1d(vals: &[(u64, f64)]) -> NavigatingNet {
        let mut n = NavigatingNet::new(1);
        for &(id, x) in vals {
            n.insert(id, vec![x]).unwrap();
            n.check_invariants().unwrap();
        }
        n
    }

    #[test]
    fn single_point() {
        let n = net_1d(&[(7, 2.0)]);
        assert_eq!(n.net_at(-40), vec![7]);
        assert_eq!(n.net_at(40), vec![7]);
        assert_eq!(n.ann(&[5.0], 0.5).unwrap(), (7, 3.0));
    }

    #[test]
    fn two_points_descent() {
        let n = net_1d(&[(0, 0.0), (1, 3.0)]);
        let y1 = n.net_at(1);
        assert!(y1.contains(&0) && y1.contains(&1));
        let y4 = n.net_at(2);
        assert_eq!(y4.len(), 1);
        assert!(n.d(0, 1) < 8.0);
    }

    #[test]
    fn all_orders_of_three() {
        let pts = [(0u64, 0.0), (3, 3.0), (10, 10.0)];
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for o in orders {
            let seq: Vec<(u64, f64)> = o.iter().map(|&k| pts[k]).collect();
            net_1d(&seq);
        }
    }

    #[test]
    fn delete_cases() {
        let mut n = net_1d(&[(0, 0.0), (3, 3.0), (10, 10.0)]);
        let del = n.delete(3).unwrap();
        n.check_invariants().unwrap();
        assert!(!n.contains(3));
        for i in -5..8 {
            for x in n.net_at(i) {
                assert!(!n.list(x, i).contains(&3));
            }
        }
        let _ = del;
        let root = n.root().unwrap();
        n.delete(root).unwrap();
        n.check_invariants().unwrap();
        let last = n.root().unwrap();
        n.delete(last).unwrap();
        assert!(n.is_empty());
        n.check_invariants().unwrap();
        assert_eq!(n.ann(&[0.0], 1.0), Err(Error::Empty));
    }

    #[test]
    fn rejects_bad_input() {
        let mut n = net_1d(&[(0, 0.0), (1, 4.0)]);
        assert_eq!(n.insert(0, vec![1.0]), Err(Error::DuplicateId(0)));
        assert!(matches!(
            n.insert(2, vec![4.0]),
            Err(Error::CoincidentPoint { id: 2, existing: 1 })
        ));
        n.check_invariants().unwrap();
        assert_eq!(n.delete(9), Err(Error::UnknownId(9)));
    }

    #[test]
    fn ann_examples() {
        let n = net_1d(&[(0, 0.0), (5, 5.0), (100, 100.0)]);
        assert_eq!(n.ann(&[4.0], 0.1).unwrap().0, 5);
        assert_eq!(n.ann(&[100.0], 0.1).unwrap(), (100, 0.0));
        let (id, d) = n.nearest_in_scale(&[4.0], -10).unwrap();
        assert_eq!((id, d), (5, 1.0));
    }

    #[test]
    fn promotion_reported_on_root_delete() {
        let mut n = net_1d(&[(0, 0.0), (1, 1.0), (2, 50.0)]);
        let root = n.root().unwrap();
        let del = n.delete(root).unwrap();
        n.check_invariants().unwrap();
        let new_root = n.root().unwrap();
        let top_scale = n.max_finite_top().unwrap_or(0) + 5;
        assert!(del.promoted_at(top_scale).contains(&new_root));
    }
}
