//! Brute-force ground truth for small problems.
//!
//! The dense SVD here goes through a cyclic two-sided Jacobi eigensolve of
//! `AᵀA`, a different code path from the one-sided Jacobi in
//! [`crate::dense::svd_small`], so the solver and its checker do not share
//! rotation code.

use serde::{Deserialize, Serialize};

use crate::dense::{axpy, dot, norm, scale, DenseBlock};
use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::sparse::{SparseMatrix, SpectrumBounds};

/// Column cap for [`dense_full_svd`].
pub const ORACLE_MAX_COLS: usize = 500;

#[derive(Debug, Clone)]
pub struct DenseSvd {
    /// `m x n`, orthonormal columns.
    pub u: DenseBlock,
    /// Descending.
    pub s: Vec<f64>,
    /// `n x n`, orthogonal.
    pub v: DenseBlock,
}

/// Symmetric eigendecomposition by cyclic Jacobi; eigenvalues descending.
pub fn symmetric_eigen(g: &DenseBlock) -> Result<(Vec<f64>, DenseBlock)> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::InvalidArgument(
            "symmetric_eigen expects a square matrix".into(),
        ));
    }
    let mut a = g.clone();
    let mut v = DenseBlock::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| a.get(i, i).powi(2)).sum();
        if off <= (f64::EPSILON * f64::EPSILON) * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J acting on (p, q)
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let evals: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| evals[y].total_cmp(&evals[x]));
    let sorted = order.iter().map(|&i| evals[i]).collect();
    Ok((sorted, v.select_columns(&order)))
}

/// Full SVD of a tall dense matrix (`rows ≥ cols`, `cols ≤ 500`).
pub fn dense_full_svd(a: &DenseBlock) -> Result<DenseSvd> {
    let (m, n) = (a.rows(), a.cols());
    if n > ORACLE_MAX_COLS {
        return Err(Error::OracleSizeCap {
            cap: ORACLE_MAX_COLS,
            found: n,
        });
    }
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "oracle expects rows >= cols, got {m}x{n}"
        )));
    }
    let gram = a.t_matmul(a)?;
    let (_, v) = symmetric_eigen(&gram)?;
    // σ = ‖A v‖ is accurate to roundoff in A, not in AᵀA
    let av = a.matmul(&v)?;
    let norms: Vec<f64> = av.columns().map(norm).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let v = v.select_columns(&order);
    let mut u = av.select_columns(&order);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut filled = vec![false; n];
    for k in 0..n {
        if s[k] <= smax * 1e-14 || s[k] == 0.0 {
            u.col_mut(k).fill(0.0);
            continue;
        }
        // modified Gram-Schmidt, twice, against the accepted columns
        let mut col = u.col(k).to_vec();
        for _ in 0..2 {
            for j in 0..k {
                if filled[j] {
                    let c = dot(u.col(j), &col);
                    axpy(-c, u.col(j), &mut col);
                }
            }
        }
        let nrm = norm(&col);
        scale(1.0 / nrm, &mut col);
        u.col_mut(k).copy_from_slice(&col);
        filled[k] = true;
    }
    crate::dense::complete_orthonormal(&mut u, &filled);
    Ok(DenseSvd { u, s, v })
}

/// Convenience wrapper densifying a sparse matrix first.
pub fn sparse_full_svd(a: &SparseMatrix) -> Result<DenseSvd> {
    dense_full_svd(&a.to_dense())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectorSpectrum {
    /// `γᵢ = ψ_d(l(σᵢ²))`, in the order of the singular values.
    pub gamma: Vec<f64>,
    /// `f(σᵢ²)`: 1 inside, 1/2 at an endpoint, 0 outside.
    pub target: Vec<f64>,
    /// `‖P_S − P‖ = max |fᵢ − γᵢ|`.
    pub error_norm: f64,
}

impl ProjectorSpectrum {
    pub fn trace(&self) -> f64 {
        self.gamma.iter().sum()
    }

    pub fn target_trace(&self) -> f64 {
        self.target.iter().sum()
    }
}

pub fn exact_projector_spectrum(singular_values: &[f64], filter: &FilterSpec) -> ProjectorSpectrum {
    let gamma: Vec<f64> = singular_values
        .iter()
        .map(|&s| filter.evaluate_sigma(s))
        .collect();
    let target: Vec<f64> = singular_values
        .iter()
        .map(|&s| filter.step.target_sigma(s))
        .collect();
    let error_norm = gamma
        .iter()
        .zip(&target)
        .map(|(g, f)| (g - f).abs())
        .fold(0.0, f64::max);
    ProjectorSpectrum {
        gamma,
        target,
        error_norm,
    }
}

/// Singular values in the closed interval `[a, b]`.
pub fn count_in_interval(singular_values: &[f64], a: f64, b: f64) -> usize {
    singular_values
        .iter()
        .filter(|&&s| a <= s && s <= b)
        .count()
}

/// Angular gap `Δ_min` between the jumps `α`, `β` and the nearest singular
/// values just inside and just outside `[a, b]`. `None` when one of the four
/// neighbours does not exist.
pub fn delta_min(singular_values: &[f64], filter: &FilterSpec) -> Option<f64> {
    let step = &filter.step;
    let theta = |s: f64| step.bounds.map_sigma(s).clamp(-1.0, 1.0).acos();
    let inside: Vec<f64> = singular_values
        .iter()
        .copied()
        .filter(|&s| step.a <= s && s <= step.b)
        .collect();
    let below = singular_values
        .iter()
        .copied()
        .filter(|&s| s < step.a)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |x| x.max(s))))?;
    let above = singular_values
        .iter()
        .copied()
        .filter(|&s| s > step.b)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |x| x.min(s))))?;
    let il = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let ir = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !il.is_finite() {
        return None;
    }
    let gaps = [
        (theta(il) - step.alpha).abs(),
        (theta(ir) - step.beta).abs(),
        (theta(below) - step.alpha).abs(),
        (theta(above) - step.beta).abs(),
    ];
    Some(gaps.into_iter().fold(f64::INFINITY, f64::min))
}

/// Picks `k` consecutive singular values (descending input) with neighbours
/// on both sides, maximizing the angular gap to those neighbours, and returns
/// `[a, b]` with each endpoint at the angular midpoint of its gap. Windows whose
/// internal gaps fall below `min_internal_gap · σ₁` are skipped.
pub fn separated_window(
    singular_values: &[f64],
    k: usize,
    bounds: &SpectrumBounds,
    min_internal_gap: f64,
) -> Option<(f64, f64)> {
    let s = singular_values;
    let n = s.len();
    if k == 0 || n < k + 2 {
        return None;
    }
    let theta = |x: f64| bounds.map_sigma(x).clamp(-1.0, 1.0).acos();
    let sigma_at = |t: f64| {
        let (hi, lo) = (bounds.sigma_max_est.powi(2), bounds.sigma_min_est.powi(2));
        ((t.cos() * (hi - lo) + hi + lo) / 2.0).max(0.0).sqrt()
    };
    let floor = min_internal_gap * s[0];
    let mut best: Option<(f64, usize)> = None;
    for i in 1..(n - k) {
        if (i..i + k - 1).any(|j| s[j] - s[j + 1] < floor) {
            continue;
        }
        let above = theta(s[i]) - theta(s[i - 1]);
        let below = theta(s[i + k]) - theta(s[i + k - 1]);
        let score = above.min(below);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, i));
        }
    }
    let (_, i) = best?;
    let b = sigma_at(0.5 * (theta(s[i]) + theta(s[i - 1])));
    let a = sigma_at(0.5 * (theta(s[i + k]) + theta(s[i + k - 1])));
    Some((a, b))
}

/// Largest principal-angle sine between the spans of two orthonormal blocks,
/// `‖(I − YYᵀ) X‖₂`. `X` may have fewer columns than `Y`, in which case this
/// measures how far `span(X)` is from lying inside `span(Y)`. Computed from the residual block rather than from
/// `1 − σ_min(YᵀX)²`, which loses all digits for small angles.
pub fn subspace_distance(x: &DenseBlock, y: &DenseBlock) -> Result<f64> {
    if x.cols() > y.cols() || x.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: y.cols(),
            found: x.cols(),
        });
    }
    let coeffs = y.t_matmul(x)?;
    let proj = y.matmul(&coeffs)?;
    let resid = x.sub(&proj)?;
    let gram = resid.t_matmul(&resid)?;
    let (evals, _) = symmetric_eigen(&gram)?;
    Ok(evals
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
        .min(1.0))
}

/// `sin∠(x, y)` for unit vectors.
pub fn vector_angle_sine(x: &[f64], y: &[f64]) -> f64 {
    let c = dot(x, y);
    let mut r = x.to_vec();
    axpy(-c, y, &mut r);
    norm(&r).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::svd_small;
    use crate::filter::{build_filter, DegreeChoice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(m: usize, n: usize, seed: u64) -> DenseBlock {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseBlock::from_col_major(
            m,
            n,
            (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn diag_spectrum() {
        let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let svd = sparse_full_svd(&a).unwrap();
        for (s, e) in svd.s.iter().zip([5.0, 4.0, 3.0, 2.0, 1.0]) {
            assert!((s - e).abs() < 1e-13);
        }
        assert_eq!(count_in_interval(&svd.s, 1.5, 3.5), 2);
        assert_eq!(count_in_interval(&svd.s, 0.0, 10.0), 5);
        assert_eq!(count_in_interval(&svd.s, 2.0, 3.0), 2);
    }

    #[test]
    fn zero_matrix() {
        let svd = dense_full_svd(&DenseBlock::zeros(4, 3)).unwrap();
        assert_eq!(svd.s, vec![0.0; 3]);
        assert!(svd.u.orthogonality_error() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_agreement_with_svd_small() {
        let a = random_dense(60, 40, 3);
        let svd = dense_full_svd(&a).unwrap();
        let mut us = svd.u.clone();
        for (k, &s) in svd.s.iter().enumerate() {
            scale(s, us.col_mut(k));
        }
        let rec = us.matmul(&svd.v.transpose()).unwrap();
        let anorm = svd.s[0];
        assert!(rec.sub(&a).unwrap().frobenius_norm() <= 1e-12 * 40.0 * anorm);
        assert!(svd.u.orthogonality_error() <= 1e-12 * 40.0);
        assert!(svd.v.orthogonality_error() <= 1e-12 * 40.0);

        // square 40x40 block carrying the same singular values
        let qr = crate::dense::thin_qr(&a).unwrap();
        let small = svd_small(&qr.r).unwrap();
        for (x, y) in small.s.iter().zip(&svd.s) {
            assert!((x - y).abs() <= 1e-10 * anorm, "{x} vs {y}");
        }
    }

    #[test]
    fn projector_spectrum_whole_interval() {
        let bounds = SpectrumBounds::exact(5.0, 1.0).unwrap();
        let f = build_filter(bounds, 1.0, 5.0, DegreeChoice::Explicit(30)).unwrap();
        let spec = exact_projector_spectrum(&[2.0, 3.0, 4.5], &f);
        assert!(spec.gamma.iter().all(|g| (g - 1.0).abs() < 1e-14));
        assert_eq!(spec.target, vec![1.0; 3]);
        assert!(spec.error_norm < 1e-14);
    }

    #[test]
    fn endpoint_singular_value_gets_half() {
        let bounds = SpectrumBounds::exact(5.0, 1.0).unwrap();
        let f = build_filter(bounds, 2.0, 3.5, DegreeChoice::Explicit(200)).unwrap();
        let spec = exact_projector_spectrum(&[2.0], &f);
        assert_eq!(spec.target[0], 0.5);
        let bound = crate::filter::pointwise_error_bound(&f.step, 200, f.step.alpha).unwrap();
        assert!((spec.gamma[0] - 0.5).abs() <= bound);
    }

    #[test]
    fn subspace_distances() {
        let x = DenseBlock::eye_columns(4, 2);
        assert!(subspace_distance(&x, &x).unwrap() < 1e-15);
        let mut y = DenseBlock::zeros(4, 2);
        y.set(2, 0, 1.0);
        y.set(3, 1, 1.0);
        assert!((subspace_distance(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let phi: f64 = 0.3;
        let mut r = DenseBlock::eye_columns(4, 2);
        r.set(0, 0, phi.cos());
        r.set(2, 0, phi.sin());
        assert!((subspace_distance(&r, &x).unwrap() - phi.sin()).abs() < 1e-15);
        let tiny: f64 = 1e-11;
        r.set(0, 0, (1.0 - tiny * tiny).sqrt());
        r.set(2, 0, tiny);
        let d = subspace_distance(&r, &x).unwrap();
        assert!((d - tiny).abs() < 1e-20, "{d}");
        assert_eq!(
            subspace_distance(&x, &DenseBlock::eye_columns(4, 3)).unwrap(),
            0.0
        );
        assert!(subspace_distance(&DenseBlock::eye_columns(4, 3), &x).is_err());
    }

    #[test]
    fn window_isolates_requested_count() {
        let s: Vec<f64> = vec![10.0, 9.0, 8.9, 6.0, 5.0, 4.9, 1.0];
        let bounds = SpectrumBounds::exact(10.5, 0.5).unwrap();
        let (a, b) = separated_window(&s, 2, &bounds, 0.0).unwrap();
        assert_eq!(count_in_interval(&s, a, b), 2);
        assert!(a > 6.0 && a < 8.9 && b > 9.0 && b < 10.0, "{a} {b}");
        let (a, b) = separated_window(&s, 1, &bounds, 0.0).unwrap();
        assert_eq!(count_in_interval(&s, a, b), 1);
        assert!(separated_window(&s, 6, &bounds, 0.0).is_none());
        assert!(separated_window(&s, 2, &bounds, 0.5).is_none());
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            dense_full_svd(&DenseBlock::zeros(600, 501)),
            Err(Error::OracleSizeCap { .. })
        ));
    }
}
