use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SparseMatrix;
use crate::dense::{axpy, dot, norm, scale, svd_small, DenseBlock};
use crate::error::{Error, Result};

/// Estimates of the extreme singular values of `A`, used to map the spectrum
/// of `AᵀA` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    /// Inflated estimate of `‖A‖`.
    pub sigma_max_est: f64,
    /// Deflated estimate of `σ_min(A)`.
    pub sigma_min_est: f64,
    /// Largest singular value of the bidiagonal projection.
    pub raw_max: f64,
    /// Smallest singular value of the bidiagonal projection.
    pub raw_min: f64,
    /// Bidiagonalization steps completed.
    pub steps: usize,
    /// True when the Krylov space was exhausted, so `raw_*` are exact.
    pub exhausted: bool,
}

impl SpectrumBounds {
    /// Bounds taken as exact: no inflation, `raw_* == *_est`.
    pub fn exact(sigma_max: f64, sigma_min: f64) -> Result<Self> {
        Self::new(sigma_max, sigma_min, sigma_max, sigma_min)
    }

    pub fn new(sigma_max_est: f64, sigma_min_est: f64, raw_max: f64, raw_min: f64) -> Result<Self> {
        let ordered = 0.0 <= sigma_min_est
            && sigma_min_est <= raw_min
            && raw_min <= raw_max
            && raw_max <= sigma_max_est;
        if !ordered || !(sigma_max_est > sigma_min_est) {
            return Err(Error::DegenerateBounds {
                max: sigma_max_est,
                min: sigma_min_est,
            });
        }
        Ok(Self {
            sigma_max_est,
            sigma_min_est,
            raw_max,
            raw_min,
            steps: 0,
            exhausted: true,
        })
    }

    /// The affine map `l(x) = (2x − σmax² − σmin²)/(σmax² − σmin²)`.
    pub fn map(&self, x: f64) -> f64 {
        let hi = self.sigma_max_est * self.sigma_max_est;
        let lo = self.sigma_min_est * self.sigma_min_est;
        (2.0 * x - hi - lo) / (hi - lo)
    }

    /// `l(σ²)`.
    pub fn map_sigma(&self, sigma: f64) -> f64 {
        self.map(sigma * sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub steps: usize,
    /// Relative safety margin applied to both raw estimates.
    pub inflate: f64,
    /// Use the deflated `raw_min` even when the Krylov space was not exhausted.
    /// Off by default: an unconverged smallest Ritz value overestimates
    /// `σ_min`, which pushes part of the spectrum below `-1`.
    pub trust_unconverged_min: bool,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            steps: 30,
            inflate: 0.05,
            trust_unconverged_min: false,
        }
    }
}

/// Golub–Kahan bidiagonalization with the default inflation.
pub fn estimate_spectrum_bounds(
    a: &SparseMatrix,
    steps: usize,
    seed: u64,
) -> Result<SpectrumBounds> {
    let cfg = BoundsConfig {
        steps,
        ..BoundsConfig::default()
    };
    estimate_spectrum_bounds_with(a, &cfg, seed)
}

/// Runs `cfg.steps` Golub–Kahan steps from a seeded Gaussian start vector with
/// full reorthogonalization of both bases.
///
/// A completed run of `k` steps costs `2k − 1` MVs (the trailing `Aᵀ` product
/// is skipped); breakdown at step `k` costs `2k`.
pub fn estimate_spectrum_bounds_with(
    a: &SparseMatrix,
    cfg: &BoundsConfig,
    seed: u64,
) -> Result<SpectrumBounds> {
    if cfg.steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "bidiagonalization needs at least 2 steps, got {}",
            cfg.steps
        )));
    }
    if !(cfg.inflate >= 0.0 && cfg.inflate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inflate must lie in [0, 1), got {}",
            cfg.inflate
        )));
    }
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::BoundsBreakdown);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let vn = norm(&v);
    scale(1.0 / vn, &mut v);

    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut exhausted = false;
    let mut scale_est = 0.0f64;

    for j in 0..cfg.steps {
        let mut u = a.apply(&vs[j])?;
        if j > 0 {
            axpy(-betas[j - 1], &us[j - 1], &mut u);
        }
        reorthogonalize(&mut u, &us);
        let alpha = norm(&u);
        scale_est = scale_est.max(alpha);
        if alpha <= breakdown_tol(scale_est) {
            if j == 0 {
                return Err(Error::BoundsBreakdown);
            }
            // A's range on span(V_j) is already spanned: zero singular value
            alphas.push(0.0);
            exhausted = true;
            break;
        }
        scale(1.0 / alpha, &mut u);
        alphas.push(alpha);
        us.push(u);

        if j + 1 == cfg.steps || j + 1 == n {
            exhausted = j + 1 == n;
            break;
        }
        let mut w = a.apply_transpose(&us[j])?;
        axpy(-alpha, &vs[j], &mut w);
        reorthogonalize(&mut w, &vs);
        let beta = norm(&w);
        scale_est = scale_est.max(beta);
        if beta <= breakdown_tol(scale_est) {
            exhausted = true;
            break;
        }
        scale(1.0 / beta, &mut w);
        betas.push(beta);
        vs.push(w);
    }

    let k = alphas.len();
    let mut b = DenseBlock::zeros(k, k);
    for i in 0..k {
        b.set(i, i, alphas[i]);
        if i + 1 < k {
            b.set(i, i + 1, betas[i]);
        }
    }
    let s = svd_small(&b)?.s;
    let raw_max = s[0];
    let raw_min = s[k - 1];
    if raw_max <= 0.0 {
        return Err(Error::BoundsBreakdown);
    }
    let sigma_max_est = raw_max * (1.0 + cfg.inflate);
    let sigma_min_est = if exhausted || cfg.trust_unconverged_min {
        (raw_min * (1.0 - cfg.inflate)).max(0.0)
    } else {
        0.0
    };
    let mut out = SpectrumBounds::new(sigma_max_est, sigma_min_est, raw_max, raw_min)?;
    out.steps = k;
    out.exhausted = exhausted;
    Ok(out)
}

fn breakdown_tol(scale: f64) -> f64 {
    1e-12 * scale
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn reorthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, x);
            axpy(-c, q, x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum_is_recovered_exactly() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = estimate_spectrum_bounds(&a, 5, 7).unwrap();
        assert!((b.raw_max - 5.0).abs() < 1e-8);
        assert!((b.raw_min - 1.0).abs() < 1e-8);
        assert!(b.exhausted);
        assert!((b.sigma_max_est / b.raw_max - 1.05).abs() < 1e-15);
        assert!((b.sigma_min_est - 0.95 * b.raw_min).abs() < 1e-15);
    }

    #[test]
    fn more_steps_than_dimension_stops_early() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = estimate_spectrum_bounds(&a, 30, 7).unwrap();
        assert_eq!(b.steps, 5);
        assert!((b.raw_min - 1.0).abs() < 1e-8);
        // 5 A-products and 4 Aᵀ-products
        assert_eq!(a.mv_count(), 9);
    }

    #[test]
    fn unconverged_minimum_is_floored_at_zero() {
        let diag: Vec<f64> = (1..=60).map(f64::from).collect();
        let a = SparseMatrix::diagonal(&diag);
        let b = estimate_spectrum_bounds(&a, 10, 1).unwrap();
        assert!(!b.exhausted);
        assert_eq!(b.sigma_min_est, 0.0);
        assert_eq!(a.mv_count(), 19);
        assert!(b.sigma_max_est >= 60.0);
    }

    #[test]
    fn zero_matrix_signals_failure() {
        let a = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        assert!(matches!(
            estimate_spectrum_bounds(&a, 5, 0),
            Err(Error::BoundsBreakdown)
        ));
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0]);
        assert!(estimate_spectrum_bounds(&a, 1, 0).is_err());
    }

    #[test]
    fn map_sends_bounds_to_unit_interval() {
        let b = SpectrumBounds::exact(3.0, 1.0).unwrap();
        assert_eq!(b.map_sigma(1.0), -1.0);
        assert_eq!(b.map_sigma(3.0), 1.0);
        assert_eq!(b.map_sigma(2.0), -0.25);
    }
}
