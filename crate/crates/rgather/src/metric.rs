//! Point sets, Euclidean distances, r-th nearest neighbor radii, solution
//! validation and the exhaustive oracles used throughout the test suites.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default size limit for the exhaustive partition oracles.
pub const ORACLE_CAP: usize = 12;

/// Euclidean distance between two coordinate slices of equal length.
pub fn dist(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(dist_unchecked(p, q))
}

/// Euclidean distance without the length check. Summation order is fixed so
/// results are bit-for-bit reproducible.
#[inline]
pub fn dist_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in p.iter().zip(q) {
        let d = a - b;
        s += d * d;
    }
    s.sqrt()
}

/// An indexed collection of points of a common dimension.
///
/// Points are stored sorted by id, so the internal index order equals the id
/// order. Every "smallest id" tie-break in the crate relies on this.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    ids: Vec<u64>,
    coords: Vec<f64>,
    index: BTreeMap<u64, usize>,
}

impl PointSet {
    /// Builds a point set, validating ids, dimensions and finiteness.
    pub fn new(dim: usize, points: Vec<(u64, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut points = points;
        points.sort_by_key(|(id, _)| *id);
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut index = BTreeMap::new();
        for (i, (id, c)) in points.into_iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {id} has a non-finite coordinate"
                )));
            }
            if index.insert(id, i).is_some() {
                return Err(Error::DuplicateId(id));
            }
            ids.push(id);
            coords.extend_from_slice(&c);
        }
        Ok(PointSet {
            dim,
            ids,
            coords,
            index,
        })
    }

    /// One-dimensional convenience constructor; point `i` gets id `i`.
    pub fn from_1d(values: &[f64]) -> Result<Self> {
        Self::new(
            1,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as u64, vec![v]))
                .collect(),
        )
    }

    /// Constructor from rows; point `i` gets id `i`.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            dim,
            rows.iter()
                .enumerate()
                .map(|(i, v)| (i as u64, v.clone()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Point ids in ascending order.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Id of the point at internal index `i`.
    pub fn id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    /// Coordinates of the point at internal index `i`.
    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Internal index of a point id.
    pub fn index_of(&self, id: u64) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownId(id))
    }

    /// Coordinates of a point by id.
    pub fn coords_of(&self, id: u64) -> Result<&[f64]> {
        Ok(self.coords(self.index_of(id)?))
    }

    /// Distance between the points at internal indices `i` and `j`.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        dist_unchecked(self.coords(i), self.coords(j))
    }

    /// Iterator over `(id, coords)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f64])> + '_ {
        (0..self.len()).map(move |i| (self.ids[i], self.coords(i)))
    }

    /// Smallest positive and largest pairwise distance, or `None` when fewer
    /// than two distinct locations exist.
    pub fn min_max_distance(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = self.d(i, j);
                if d > 0.0 && d < lo {
                    lo = d;
                }
                hi = hi.max(d);
            }
        }
        if lo.is_finite() {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Ratio of the largest to the smallest positive interpoint distance.
    pub fn aspect_ratio(&self) -> Option<f64> {
        self.min_max_distance().map(|(lo, hi)| hi / lo)
    }

    /// Restriction to the given internal indices (ids are preserved).
    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let pts = indices
            .iter()
            .map(|&i| (self.ids[i], self.coords(i).to_vec()))
            .collect();
        PointSet::new(self.dim, pts).expect("subset of a valid point set is valid")
    }
}

/// Knobs shared by the clustering algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RGatherParams {
    /// Minimum cluster size.
    pub r: usize,
    /// Outlier budget.
    pub k_out: usize,
    /// Exponent of the power cost.
    pub k_pow: u32,
    /// Approximation factor of the near-neighbor graph.
    pub c: f64,
    /// Ruling set parameter.
    pub beta: usize,
    /// Accuracy knob for (1+eps) grids and approximate nearest neighbors.
    pub eps: f64,
}

impl Default for RGatherParams {
    fn default() -> Self {
        RGatherParams {
            r: 1,
            k_out: 0,
            k_pow: 1,
            c: 1.0,
            beta: 1,
            eps: 0.5,
        }
    }
}

impl RGatherParams {
    pub fn check(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        if !(self.c >= 1.0) {
            return Err(Error::InvalidParameter("C must be at least 1".into()));
        }
        if self.beta == 0 {
            return Err(Error::InvalidParameter("beta must be at least 1".into()));
        }
        if self.k_pow == 0 {
            return Err(Error::InvalidParameter("k_pow must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter("eps must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// Center of a cluster: an input point or an arbitrary location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Center {
    Point(u64),
    Coords(Vec<f64>),
}

/// One cluster of a [`Clustering`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Center,
    pub members: Vec<u64>,
}

/// A partition of point ids into clusters plus a set of outliers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub outliers: Vec<u64>,
}

impl Clustering {
    /// Sorts members, outliers and clusters (by center id) into canonical order.
    pub fn normalize(&mut self) {
        for c in &mut self.clusters {
            c.members.sort_unstable();
        }
        self.outliers.sort_unstable();
        self.clusters.sort_by(|a, b| {
            let ka = a.members.first().copied().unwrap_or(u64::MAX);
            let kb = b.members.first().copied().unwrap_or(u64::MAX);
            match (&a.center, &b.center) {
                (Center::Point(x), Center::Point(y)) => x.cmp(y),
                _ => ka.cmp(&kb),
            }
        });
    }

    /// Map from member id to the index of its cluster.
    pub fn assignment(&self) -> BTreeMap<u64, usize> {
        let mut m = BTreeMap::new();
        for (ci, c) in self.clusters.iter().enumerate() {
            for &p in &c.members {
                m.insert(p, ci);
            }
        }
        m
    }
}

/// Metrics of a clustering computed by brute force.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub num_clusters: usize,
    /// Zero when there are no clusters.
    pub min_cluster_size: usize,
    pub max_radius: f64,
    pub total_power_cost: f64,
    pub outlier_count: usize,
}

/// Distance from the point at index `i` to a cluster center.
pub(crate) fn center_distance(p: &PointSet, i: usize, center: &Center) -> Result<f64> {
    match center {
        Center::Point(id) => Ok(p.d(i, p.index_of(*id)?)),
        Center::Coords(c) => dist(p.coords(i), c),
    }
}

/// Checks the partition structure and computes its metrics.
pub fn validate(p: &PointSet, sol: &Clustering, k_pow: u32) -> Result<ValidationReport> {
    let mut seen = BTreeSet::new();
    let mut claim = |id: u64| -> Result<()> {
        p.index_of(id)?;
        if !seen.insert(id) {
            return Err(Error::MalformedClustering(format!(
                "point {id} appears more than once"
            )));
        }
        Ok(())
    };
    for c in &sol.clusters {
        if c.members.is_empty() {
            return Err(Error::MalformedClustering("empty cluster".into()));
        }
        for &m in &c.members {
            claim(m)?;
        }
        if let Center::Point(id) = c.center {
            if !c.members.contains(&id) {
                return Err(Error::MalformedClustering(format!(
                    "center {id} is not a member of its cluster"
                )));
            }
        }
    }
    for &o in &sol.outliers {
        claim(o)?;
    }
    if seen.len() != p.len() {
        let missing = p.ids().iter().find(|id| !seen.contains(id)).copied();
        return Err(Error::MalformedClustering(format!(
            "point {} is neither clustered nor an outlier",
            missing.unwrap_or_default()
        )));
    }
    let mut max_radius: f64 = 0.0;
    let mut cost = 0.0;
    let mut min_size = usize::MAX;
    for c in &sol.clusters {
        min_size = min_size.min(c.members.len());
        for &m in &c.members {
            let d = center_distance(p, p.index_of(m)?, &c.center)?;
            max_radius = max_radius.max(d);
            cost += d.powi(k_pow as i32);
        }
    }
    Ok(ValidationReport {
        num_clusters: sol.clusters.len(),
        min_cluster_size: if sol.clusters.is_empty() { 0 } else { min_size },
        max_radius,
        total_power_cost: cost,
        outlier_count: sol.outliers.len(),
    })
}

/// Sorted distances from the point at index `i` to all points (itself included),
/// ties broken by id.
fn sorted_distances(p: &PointSet, i: usize) -> Vec<f64> {
    let mut ds: Vec<(f64, u64)> = (0..p.len()).map(|j| (p.d(i, j), p.id(j))).collect();
    ds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ds.into_iter().map(|x| x.0).collect()
}

/// Distance from point `id` to its r-th nearest neighbor; the point itself is
/// the first.
pub fn rho_r(p: &PointSet, id: u64, r: usize) -> Result<f64> {
    let i = p.index_of(id)?;
    check_r(p, r)?;
    Ok(sorted_distances(p, i)[r - 1])
}

fn check_r(p: &PointSet, r: usize) -> Result<()> {
    if r == 0 || r > p.len() {
        return Err(Error::InvalidParameter(format!(
            "r must lie in [1, {}], got {r}",
            p.len()
        )));
    }
    Ok(())
}

/// `rho_r` for every point, in index order.
pub fn rho_r_all(p: &PointSet, r: usize) -> Result<Vec<f64>> {
    check_r(p, r)?;
    Ok((0..p.len()).map(|i| sorted_distances(p, i)[r - 1]).collect())
}

/// Maximum of `rho_r` over the point set.
pub fn rho_hat(p: &PointSet, r: usize) -> Result<f64> {
    Ok(rho_r_all(p, r)?.into_iter().fold(0.0, f64::max))
}

/// The (k+1)-th largest value of `rho_r`; zero when every point may be dropped.
pub fn rho_hat_k(p: &PointSet, r: usize, k: usize) -> Result<f64> {
    let mut v = rho_r_all(p, r)?;
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v.get(k).copied().unwrap_or(0.0))
}

fn check_cap(p: &PointSet) -> Result<()> {
    if p.len() > ORACLE_CAP {
        return Err(Error::OracleCap {
            n: p.len(),
            cap: ORACLE_CAP,
        });
    }
    Ok(())
}

/// Per-subset cluster cost tables indexed by bitmask.
pub(crate) struct SubsetCosts {
    pub radius: Vec<f64>,
}

pub(crate) fn subset_radius_costs(p: &PointSet, centers_in_p: bool) -> SubsetCosts {
    let n = p.len();
    let mut radius = vec![0.0; 1 << n];
    for (mask, slot) in radius.iter_mut().enumerate().skip(1) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        *slot = if centers_in_p {
            members
                .iter()
                .map(|&c| members.iter().map(|&q| p.d(c, q)).fold(0.0, f64::max))
                .fold(f64::INFINITY, f64::min)
        } else {
            let xs = members.iter().map(|&i| p.coords(i)[0]);
            let lo = xs.clone().fold(f64::INFINITY, f64::min);
            let hi = xs.fold(f64::NEG_INFINITY, f64::max);
            (hi - lo) / 2.0
        };
    }
    SubsetCosts { radius }
}

/// Minimum over partitions of `mask` into parts of size at least `r`, where
/// each part costs `cost[part]` and parts combine with `combine`. Up to `k`
/// points may be discarded. Returns infinity when no partition exists.
pub(crate) fn partition_dp(
    n: usize,
    r: usize,
    k: usize,
    cost: &[f64],
    combine: fn(f64, f64) -> f64,
) -> f64 {
    let full = (1usize << n) - 1;
    // table[j][mask]: best value for `mask` with at most j discards.
    let mut table = vec![vec![f64::INFINITY; 1 << n]; k + 1];
    for row in table.iter_mut() {
        row[0] = 0.0;
    }
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        for j in 0..=k {
            let mut best = if j > 0 {
                table[j - 1][rest]
            } else {
                f64::INFINITY
            };
            // Enumerate parts containing the lowest point.
            let mut sub = rest;
            loop {
                let part = sub | low;
                if part.count_ones() as usize >= r {
                    let v = combine(cost[part], table[j][mask ^ part]);
                    if v < best {
                        best = v;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            table[j][mask] = best;
        }
    }
    table[k][full]
}

/// Exact optimal r-gather radius by exhaustive partition enumeration.
///
/// With `centers_in_p` each cluster's center is one of its members, which
/// upper-bounds the optimum over arbitrary centers. Without it the
/// continuous optimum is computed, which is only supported in one dimension.
pub fn brute_force_opt_radius(p: &PointSet, r: usize, centers_in_p: bool) -> Result<f64> {
    brute_force_radius_impl(p, r, 0, centers_in_p)
}

/// Like [`brute_force_opt_radius`] (centers in the point set) but up to `k`
/// points may be discarded.
pub fn brute_force_opt_radius_outliers(p: &PointSet, r: usize, k: usize) -> Result<f64> {
    brute_force_radius_impl(p, r, k, true)
}

fn brute_force_radius_impl(p: &PointSet, r: usize, k: usize, centers_in_p: bool) -> Result<f64> {
    check_cap(p)?;
    if p.is_empty() {
        return Err(Error::Empty);
    }
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    if !centers_in_p && p.dim() != 1 {
        return Err(Error::InvalidParameter(
            "continuous centers are only supported in one dimension".into(),
        ));
    }
    let costs = subset_radius_costs(p, centers_in_p);
    let v = partition_dp(p.len(), r, k.min(p.len()), &costs.radius, f64::max);
    if v.is_infinite() {
        return Err(Error::Infeasible(format!(
            "no partition into clusters of size at least {r}"
        )));
    }
    Ok(v)
}

/// Checks that the optimum radius is at least half of `rho_hat`.
///
/// In one dimension the continuous optimum is used. In higher dimensions the
/// half-diameter relaxation stands in for it; it is a lower bound on any
/// cluster radius, so the check is at least as strict as with the true optimum.
pub fn lower_bound_check(p: &PointSet, r: usize) -> Result<bool> {
    check_cap(p)?;
    let opt = if p.dim() == 1 {
        brute_force_opt_radius(p, r, false)?
    } else {
        let n = p.len();
        let mut half_diam = vec![0.0; 1 << n];
        for (mask, slot) in half_diam.iter_mut().enumerate() {
            let mut m: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask >> i & 1 == 1 && mask >> j & 1 == 1 {
                        m = m.max(p.d(i, j));
                    }
                }
            }
            *slot = m / 2.0;
        }
        partition_dp(n, r, 0, &half_diam, f64::max)
    };
    Ok(opt >= rho_hat(p, r)? / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: &[f64]) -> PointSet {
        PointSet::from_1d(v).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(dist(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(dist(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(dist(&[0.0], &[7.0]).unwrap(), 7.0);
        assert!(matches!(
            dist(&[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rho_examples() {
        let p = line(&[0.0, 1.0, 3.0]);
        assert_eq!(rho_r(&p, 0, 2).unwrap(), 1.0);
        assert_eq!(rho_r(&p, 2, 3).unwrap(), 3.0);
        assert_eq!(rho_r(&p, 1, 1).unwrap(), 0.0);
        assert!(rho_r(&p, 0, 4).is_err());
        assert_eq!(rho_hat(&p, 2).unwrap(), 2.0);
        assert_eq!(rho_hat(&line(&[0.0, 1.0, 10.0, 11.0]), 2).unwrap(), 1.0);
        assert_eq!(rho_hat(&p, 1).unwrap(), 0.0);
    }

    #[test]
    fn rho_hat_k_examples() {
        let p = line(&[0.0, 1.0, 10.0, 11.0, 50.0]);
        assert_eq!(rho_hat_k(&p, 2, 1).unwrap(), 1.0);
        assert_eq!(rho_hat_k(&p, 2, 0).unwrap(), rho_hat(&p, 2).unwrap());
        let min = rho_r_all(&p, 2).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(rho_hat_k(&p, 2, 4).unwrap(), min);
    }

    #[test]
    fn validate_examples() {
        let p = line(&[0.0, 1.0, 10.0, 11.0]);
        let sol = Clustering {
            clusters: vec![
                Cluster {
                    center: Center::Point(0),
                    members: vec![0, 1],
                },
                Cluster {
                    center: Center::Point(2),
                    members: vec![2, 3],
                },
            ],
            outliers: vec![],
        };
        let rep = validate(&p, &sol, 1).unwrap();
        assert_eq!(rep.max_radius, 1.0);
        assert_eq!(rep.min_cluster_size, 2);
        assert_eq!(rep.total_power_cost, 2.0);
        assert_eq!(validate(&p, &sol, 2).unwrap().total_power_cost, 2.0);

        let single = line(&[4.0]);
        let s = Clustering {
            clusters: vec![Cluster {
                center: Center::Point(0),
                members: vec![0],
            }],
            outliers: vec![],
        };
        assert_eq!(validate(&single, &s, 1).unwrap().max_radius, 0.0);

        let p5 = line(&[0.0, 1.0, 10.0, 11.0, 50.0]);
        let mut with_out = sol.clone();
        with_out.outliers = vec![4];
        assert_eq!(validate(&p5, &with_out, 1).unwrap().outlier_count, 1);
        assert!(validate(&p5, &sol, 1).is_err());
        let mut overlap = with_out.clone();
        overlap.clusters[1].members.push(0);
        assert!(validate(&p5, &overlap, 1).is_err());
    }

    #[test]
    fn oracle_examples() {
        let p = line(&[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(brute_force_opt_radius(&p, 2, true).unwrap(), 1.0);
        assert_eq!(brute_force_opt_radius(&p, 2, false).unwrap(), 0.5);
        assert_eq!(brute_force_opt_radius(&line(&[3.0]), 1, true).unwrap(), 0.0);
        assert_eq!(brute_force_opt_radius(&p, 1, true).unwrap(), 0.0);
        let p5 = line(&[0.0, 1.0, 10.0, 11.0, 50.0]);
        assert_eq!(brute_force_opt_radius_outliers(&p5, 2, 1).unwrap(), 1.0);
        assert_eq!(
            brute_force_opt_radius_outliers(&p5, 2, 0).unwrap(),
            brute_force_opt_radius(&p5, 2, true).unwrap()
        );
        assert_eq!(brute_force_opt_radius_outliers(&p5, 1, 2).unwrap(), 0.0);
        let big = line(&(0..13).map(|i| i as f64).collect::<Vec<_>>());
        assert!(matches!(
            brute_force_opt_radius(&big, 2, true),
            Err(Error::OracleCap { .. })
        ));
    }

    #[test]
    fn lower_bound_examples() {
        assert!(lower_bound_check(&line(&[0.0, 1.0, 3.0]), 2).unwrap());
        assert!(lower_bound_check(&line(&[0.0, 1.0, 10.0, 11.0]), 2).unwrap());
        assert!(lower_bound_check(&line(&[2.0]), 1).unwrap());
        let p = PointSet::from_rows(2, &[vec![0.0, 0.0], vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert!(lower_bound_check(&p, 2).unwrap());
    }

    #[test]
    fn point_set_rejects_bad_input() {
        assert!(matches!(
            PointSet::new(1, vec![(1, vec![0.0]), (1, vec![2.0])]),
            Err(Error::DuplicateId(1))
        ));
        assert!(PointSet::new(2, vec![(1, vec![0.0])]).is_err());
        assert!(PointSet::new(1, vec![(1, vec![f64::NAN])]).is_err());
    }
}
