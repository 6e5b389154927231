//! Johnson-Lindenstrauss projection and the Euclidean LSH family based on
//! randomly shifted grids of balls.
//!
//! A hash function projects a point with a Gaussian matrix to `t` dimensions
//! and returns the first of `U` shifted grids whose ball of radius `w` covers
//! the projection. Only `U = 64` grids are drawn, so some projections are not
//! covered; bucketing then falls back to the unshifted grid cell containing
//! the projection and counts the event.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::metric::PointSet;
use crate::rng::KeyedRng;

/// Constant in the projection dimension `ceil(c / eps^2 * ln n)`.
pub const JL_CONSTANT: f64 = 8.0;
/// Number of shifted grids per hash function.
pub const DEFAULT_GRIDS: usize = 64;
/// Far pairs are those at distance at least `FAR_FACTOR * C * R`.
pub const FAR_FACTOR: f64 = 4.0;
/// Constant in the number of hash draws `ceil(c_s ln n / P1)`.
pub const DRAW_CONSTANT: f64 = 3.0;
/// Monte-Carlo trials used to calibrate collision probabilities.
pub const CALIBRATION_TRIALS: usize = 20_000;
const CALIBRATION_SEED: u64 = 0x6c73_685f_6361_6c69;

/// A seeded Gaussian projection to `t` dimensions with entries of variance `1/t`.
#[derive(Clone, Debug, PartialEq)]
pub struct JlProjection {
    pub t: usize,
    pub d: usize,
    pub seed: u64,
    matrix: Vec<f64>,
}

impl JlProjection {
    /// Projection sized for `n` points at distortion `eps`.
    pub fn new(d: usize, n: usize, eps: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must lie in (0,1)".into()));
        }
        let t = jl_dim(n, eps);
        let mut rng = KeyedRng::new(seed, &[0x4a4c]);
        let scale = 1.0 / (t as f64).sqrt();
        let matrix = (0..t * d).map(|_| rng.gaussian() * scale).collect();
        Ok(JlProjection { t, d, seed, matrix })
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.len(),
            });
        }
        Ok(mat_vec(&self.matrix, self.t, p))
    }
}

/// Target dimension `ceil(8 / eps^2 * ln n)`, at least 1.
pub fn jl_dim(n: usize, eps: f64) -> usize {
    ((JL_CONSTANT / (eps * eps)) * (n.max(2) as f64).ln())
        .ceil()
        .max(1.0) as usize
}

/// Projects every point of `p`, keeping ids.
pub fn jl_project(p: &PointSet, eps: f64, seed: u64) -> Result<PointSet> {
    let proj = JlProjection::new(p.dim(), p.len(), eps, seed)?;
    let pts = p
        .iter()
        .map(|(id, c)| Ok((id, proj.apply(c)?)))
        .collect::<Result<Vec<_>>>()?;
    PointSet::new(proj.t, pts)
}

fn mat_vec(m: &[f64], rows: usize, p: &[f64]) -> Vec<f64> {
    let d = p.len();
    (0..rows)
        .map(|i| {
            let row = &m[i * d..(i + 1) * d];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(p) {
                s += a * b;
            }
            s
        })
        .collect()
}

/// Result of hashing one point with one function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HashOutcome {
    /// Index of the first covering grid and the grid point identifier.
    Covered { u: u16, x: Vec<i64> },
    NotCovered,
}

/// One component of a bucket key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyPart {
    Cell { u: u16, x: Vec<i64> },
    /// Unshifted grid cell used when no shifted grid covers the projection.
    Fallback { x: Vec<i64> },
}

/// Concatenated key of `kc` hash functions.
pub type LshKey = Vec<KeyPart>;

/// One draw from the shifted-grid LSH family.
#[derive(Clone, Debug, PartialEq)]
pub struct LshFunction {
    pub d: usize,
    pub t: usize,
    pub w: f64,
    pub grids: usize,
    a: Vec<f64>,
    shifts: Vec<f64>,
}

impl LshFunction {
    /// Draws a function from the stream keyed by `(seed, tags)`.
    pub fn new(d: usize, t: usize, w: f64, grids: usize, seed: u64, tags: &[u64]) -> Result<Self> {
        if grids == 0 || grids > u16::MAX as usize {
            return Err(Error::InvalidParameter("grid count out of range".into()));
        }
        if !(w > 0.0) || t == 0 || d == 0 {
            return Err(Error::InvalidParameter(
                "w, t and d must be positive".into(),
            ));
        }
        let mut rng = KeyedRng::new(seed, tags);
        let scale = 1.0 / (t as f64).sqrt();
        let a = (0..t * d).map(|_| rng.gaussian() * scale).collect();
        let shifts = (0..grids * t)
            .map(|_| rng.uniform_range(0.0, 4.0 * w))
            .collect();
        Ok(LshFunction {
            d,
            t,
            w,
            grids,
            a,
            shifts,
        })
    }

    fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.len(),
            });
        }
        Ok(mat_vec(&self.a, self.t, p))
    }

    fn hash_projected(&self, y: &[f64]) -> HashOutcome {
        let side = 4.0 * self.w;
        let inv = 1.0 / side;
        let w2 = self.w * self.w;
        for (u, v) in self.shifts.chunks_exact(self.t).enumerate() {
            // Branch-free sum: an early exit mispredicts about half the time.
            let s: f64 = y
                .iter()
                .zip(v)
                .map(|(&yj, &vj)| {
                    let a = (yj - vj) * inv;
                    let diff = a - round_fast(a);
                    diff * diff
                })
                .sum::<f64>()
                * side
                * side;
            if s > w2 {
                continue;
            }
            let x = y.iter().zip(v).map(|(&yj, &vj)| nearest_int((yj - vj) * inv)).collect();
            return HashOutcome::Covered { u: u as u16, x };
        }
        HashOutcome::NotCovered
    }

    fn key_part_projected(&self, y: &[f64]) -> (KeyPart, bool) {
        match self.hash_projected(y) {
            HashOutcome::Covered { u, x } => (KeyPart::Cell { u, x }, false),
            HashOutcome::NotCovered => {
                let side = 4.0 * self.w;
                let x = y.iter().map(|v| (v / side).floor() as i64).collect();
                (KeyPart::Fallback { x }, true)
            }
        }
    }
}

/// `floor(a + 0.5)` without a libm call; the hot loop of hashing rounds
/// every coordinate against every grid.
#[inline]
fn nearest_int(a: f64) -> i64 {
    let t = a + 0.5;
    let k = t as i64;
    if (k as f64) > t {
        k - 1
    } else {
        k
    }
}

/// Nearest integer as a float, ties to even, with the add-and-subtract trick.
/// Falls back to `round` beyond 2^50, where the trick loses precision.
#[inline]
fn round_fast(a: f64) -> f64 {
    const MAGIC: f64 = 6_755_399_441_055_744.0;
    if a.abs() < (1u64 << 50) as f64 {
        (a + MAGIC) - MAGIC
    } else {
        a.round()
    }
}

/// Hashes `p` with `f`: the first covering grid ball, or `NotCovered`.
pub fn lsh_hash(f: &LshFunction, p: &[f64]) -> Result<HashOutcome> {
    Ok(f.hash_projected(&f.project(p)?))
}

/// Concatenated key of all functions in `g`, or `None` when any component is
/// not covered.
pub fn lsh_key(g: &[LshFunction], p: &[f64]) -> Result<Option<LshKey>> {
    let mut key = Vec::with_capacity(g.len());
    for f in g {
        match lsh_hash(f, p)? {
            HashOutcome::Covered { u, x } => key.push(KeyPart::Cell { u, x }),
            HashOutcome::NotCovered => return Ok(None),
        }
    }
    Ok(Some(key))
}

/// Bucket key of `p` hashed at scale `scale` (the point is divided by the
/// scale first). Uncovered components fall back to the unshifted cell; the
/// second value reports whether that happened.
pub fn bucket_key(g: &[LshFunction], p: &[f64], scale: f64) -> Result<(LshKey, bool)> {
    let scaled: Vec<f64> = p.iter().map(|v| v / scale).collect();
    let mut key = Vec::with_capacity(g.len());
    let mut fell_back = false;
    for f in g {
        let (part, fb) = f.key_part_projected(&f.project(&scaled)?);
        fell_back |= fb;
        key.push(part);
    }
    Ok((key, fell_back))
}

/// Parameters of the LSH near-neighbor construction for a given input size.
#[derive(Clone, Debug, PartialEq)]
pub struct LshParams {
    /// Projection dimension of each hash function.
    pub t: usize,
    /// Ball radius of the grids.
    pub w: f64,
    /// Shifted grids per function.
    pub grids: usize,
    /// Functions concatenated per key.
    pub kc: usize,
    /// Independent key draws.
    pub s: usize,
    /// Estimated single-function collision probability at distance 1.
    pub p1_hat: f64,
    /// Estimated single-function collision probability at distance `FAR_FACTOR * C`.
    pub p2_hat: f64,
}

impl LshParams {
    /// Desk-scale parameters for `n` points and approximation factor `c`.
    pub fn for_size(n: usize, c: f64) -> Self {
        let ln_n = (n.max(3) as f64).ln();
        let t = (ln_n.powf(0.8).round() as usize).max(4);
        let w = (t as f64).cbrt();
        let grids = DEFAULT_GRIDS;
        let p1_hat = estimate_collision(t, w, grids, 1.0);
        let p2_hat = estimate_collision(t, w, grids, FAR_FACTOR * c);
        let floor = 1.0 / (2.0 * CALIBRATION_TRIALS as f64);
        let kc = ((4.0 * ln_n) / (1.0 / p2_hat.max(floor)).ln())
            .ceil()
            .max(1.0) as usize;
        let p1_key = p1_hat.max(floor).powi(kc as i32);
        let s = (DRAW_CONSTANT * ln_n / p1_key).ceil().max(1.0) as usize;
        LshParams {
            t,
            w,
            grids,
            kc,
            s,
            p1_hat,
            p2_hat,
        }
    }

    /// The `kc` functions of key draw number `draw`.
    pub fn functions(&self, d: usize, seed: u64, draw: usize) -> Vec<LshFunction> {
        (0..self.kc)
            .map(|i| {
                LshFunction::new(d, self.t, self.w, self.grids, seed, &[draw as u64, i as u64])
                    .expect("parameters validated at construction")
            })
            .collect()
    }
}

/// Monte-Carlo estimate of the probability that two points at `distance`
/// share a bucket under one function, fallback cells included. Results are
/// cached per process and use a fixed calibration seed.
pub fn estimate_collision(t: usize, w: f64, grids: usize, distance: f64) -> f64 {
    static CACHE: OnceLock<Mutex<BTreeMap<(usize, u64, usize, u64), f64>>> = OnceLock::new();
    let key = (t, w.to_bits(), grids, distance.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(&v) = cache.lock().expect("cache mutex poisoned").get(&key) {
        return v;
    }
    let mut base_rng = KeyedRng::new(CALIBRATION_SEED, &[t as u64, distance.to_bits()]);
    let mut hits = 0usize;
    for trial in 0..CALIBRATION_TRIALS {
        let f = LshFunction::new(1, t, w, grids, CALIBRATION_SEED, &[t as u64, trial as u64])
            .expect("valid calibration parameters");
        let base = base_rng.uniform_range(-1000.0, 1000.0);
        let a = f.key_part_projected(&f.project(&[base]).expect("dimension 1")).0;
        let b = f
            .key_part_projected(&f.project(&[base + distance]).expect("dimension 1"))
            .0;
        if a == b {
            hits += 1;
        }
    }
    let v = hits as f64 / CALIBRATION_TRIALS as f64;
    cache.lock().expect("cache mutex poisoned").insert(key, v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jl_dimension_formula() {
        assert_eq!(jl_dim(50, 0.3), ((8.0 / 0.09) * 50f64.ln()).ceil() as usize);
        assert!(JlProjection::new(3, 10, 1.5, 0).is_err());
    }

    #[test]
    fn jl_is_linear() {
        let proj = JlProjection::new(5, 20, 0.5, 3).unwrap();
        let z = proj.apply(&[0.0; 5]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let p = [1.0, -2.0, 0.5, 3.0, 4.0];
        assert_eq!(proj.apply(&p).unwrap(), proj.apply(&p).unwrap());
    }

    #[test]
    fn hash_is_deterministic_and_local() {
        let f = LshFunction::new(3, 4, 4f64.cbrt(), 64, 11, &[0]).unwrap();
        let g = LshFunction::new(3, 4, 4f64.cbrt(), 64, 11, &[0]).unwrap();
        let p = [0.3, 1.7, -2.2];
        assert_eq!(lsh_hash(&f, &p).unwrap(), lsh_hash(&g, &p).unwrap());
        let q = p;
        assert_eq!(
            lsh_key(&[f.clone()], &p).unwrap(),
            lsh_key(&[f.clone()], &q).unwrap()
        );
        assert!(lsh_hash(&f, &[1.0]).is_err());
    }

    #[test]
    fn single_function_key_matches_hash() {
        let f = LshFunction::new(2, 4, 4f64.cbrt(), 64, 5, &[1]).unwrap();
        for i in 0..50 {
            let p = [i as f64 * 0.37, -(i as f64) * 0.11];
            let key = lsh_key(std::slice::from_ref(&f), &p).unwrap();
            match lsh_hash(&f, &p).unwrap() {
                HashOutcome::Covered { u, x } => {
                    assert_eq!(key, Some(vec![KeyPart::Cell { u, x }]))
                }
                HashOutcome::NotCovered => assert_eq!(key, None),
            }
        }
    }

    #[test]
    fn scale_covariance() {
        let params = LshParams::for_size(50, 2.0);
        let g = params.functions(2, 9, 0);
        let pts: Vec<[f64; 2]> = (0..30)
            .map(|i| [(i * 7 % 13) as f64 * 0.9, (i * 5 % 11) as f64 * 1.3])
            .collect();
        let r = 3.5;
        for a in &pts {
            let ka = bucket_key(&g, a, r).unwrap().0;
            let scaled = [a[0] / r, a[1] / r];
            assert_eq!(ka, bucket_key(&g, &scaled, 1.0).unwrap().0);
        }
    }

    #[test]
    fn close_pairs_collide_more_than_far_pairs() {
        let t = 16;
        let w = (t as f64).cbrt();
        let near = estimate_collision(t, w, 64, 1.0);
        let far = estimate_collision(t, w, 64, 10.0 * 2.0);
        assert!(near > far, "near {near} far {far}");
    }

    #[test]
    fn parameters_are_sane() {
        let p = LshParams::for_size(200, 2.0);
        assert!(p.t >= 4);
        assert!(p.p1_hat > p.p2_hat);
        assert!(p.kc >= 1 && p.s >= 1);
    }
}
