//! Cauchy (1-stable) sketches for `l1` norms, recovered by the median of
//! absolute values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

pub const DEFAULT_C_SKETCH: f64 = 8.0;

/// Row count for a sketch: `ceil(c / eps^2 * ln(1/delta))`, rounded up to odd.
pub fn sketch_rows(delta: f64, eps: f64, c_sketch: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(c_sketch.is_finite() && c_sketch > 0.0) {
        return Err(Error::InvalidParameter(format!("c_sketch must be positive, got {c_sketch}")));
    }
    let raw = (c_sketch / (eps * eps) * (1.0 / delta).ln()).ceil().max(1.0) as usize;
    Ok(if raw.is_multiple_of(2) { raw + 1 } else { raw })
}

/// An `ell x m` matrix of truncated standard Cauchy samples.
///
/// Stored edge-major: the `ell` samples of column `e` are contiguous, which is
/// the access pattern for assembling `B^T C^T` one vertex row at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator {
    ell: usize,
    m: usize,
    delta: f64,
    eps: f64,
    seed: u64,
    bound: f64,
    data: Vec<f64>,
}

/// `SketchMatrix(m, delta, eps)` with the default constant.
pub fn sketch_matrix(m: usize, delta: f64, eps: f64, seed: u64) -> Result<SketchOperator> {
    SketchOperator::generate(m, delta, eps, seed, DEFAULT_C_SKETCH)
}

impl SketchOperator {
    pub fn generate(m: usize, delta: f64, eps: f64, seed: u64, c_sketch: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("sketch needs m >= 1".into()));
        }
        let ell = sketch_rows(delta, eps, c_sketch)?;
        let bound = (m as f64).powi(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = f64::EPSILON / 2.0;
        let hi = 1.0 - lo;
        let data = (0..m * ell)
            .map(|_| {
                let u: f64 = rng.random::<f64>().clamp(lo, hi);
                (std::f64::consts::PI * (u - 0.5)).tan().clamp(-bound, bound)
            })
            .collect();
        Ok(SketchOperator {
            ell,
            m,
            delta,
            eps,
            seed,
            bound,
            data,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Truncation bound on `|C_ij|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Column `e` of `C`, i.e. the sketch of the basis vector `e_e`.
    pub fn column(&self, e: usize) -> &[f64] {
        &self.data[e * self.ell..(e + 1) * self.ell]
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.ell + row]
    }

    /// `C v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m, v.len())?;
        let mut out = vec![0.0; self.ell];
        for (e, &ve) in v.iter().enumerate() {
            if ve != 0.0 {
                for (o, c) in out.iter_mut().zip(self.column(e)) {
                    *o += c * ve;
                }
            }
        }
        Ok(out)
    }

    /// Estimate of `||v||_1` from a sketch `s = C v`.
    pub fn recover_norm(&self, s: &[f64]) -> Result<f64> {
        check_len(self.ell, s.len())?;
        Ok(recover_norm(s))
    }
}

/// Median of `|s_i|`. For odd lengths this is the exact middle order
/// statistic; for even lengths the upper middle one. Empty input gives 0.
pub fn recover_norm(s: &[f64]) -> f64 {
    let mut scratch = Vec::with_capacity(s.len());
    median_abs_into(s.iter().copied(), &mut scratch)
}

/// [`recover_norm`] over an iterator, reusing `scratch` as the selection buffer.
pub(crate) fn median_abs_into(values: impl Iterator<Item = f64>, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(values.map(f64::abs));
    if scratch.is_empty() {
        return 0.0;
    }
    let mid = scratch.len() / 2;
    let (_, median, _) = scratch.select_nth_unstable_by(mid, f64::total_cmp);
    *median
}
