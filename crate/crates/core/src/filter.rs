//! Chebyshev–Jackson approximation of the step function whose matrix image is
//! the spectral projector of `AᵀA` onto singular values in `[a, b]`.
//!
//! With `x = l(σ²)` and `θ = arccos x`, the step has jumps at `α = arccos l(a²)`
//! and `β = arccos l(b²)`. The damped series
//!
//! ```text
//! ψ_d(x) = c₀ + Σ_{j=1..d} ρ_{j,d} c_j T_j(x)
//! ```
//!
//! (with `c₀` stored already halved) stays inside `[0, 1]` on `[-1, 1]`, so
//! `P = ψ_d(l(AᵀA))` is symmetric positive semidefinite with eigenvalues in
//! `[0, 1]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::sparse::{MappedGram, SparseMatrix, SpectrumBounds};

/// The interval of interest together with its image under the spectrum map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub a: f64,
    pub b: f64,
    /// `arccos l(a²)`.
    pub alpha: f64,
    /// `arccos l(b²)`.
    pub beta: f64,
    /// `l(a²)`: the left jump on `[-1, 1]`.
    pub lo: f64,
    /// `l(b²)`: the right jump on `[-1, 1]`.
    pub hi: f64,
    pub bounds: SpectrumBounds,
}

impl StepSpec {
    pub fn new(bounds: SpectrumBounds, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval {
                a,
                b,
                reason: "need a < b".into(),
            });
        }
        if a < bounds.sigma_min_est || b > bounds.sigma_max_est {
            return Err(Error::InvalidInterval {
                a,
                b,
                reason: format!(
                    "outside estimated spectrum [{}, {}]",
                    bounds.sigma_min_est, bounds.sigma_max_est
                ),
            });
        }
        let lo = bounds.map_sigma(a).clamp(-1.0, 1.0);
        let hi = bounds.map_sigma(b).clamp(-1.0, 1.0);
        let alpha = lo.acos();
        let beta = hi.acos();
        if !(alpha > beta) {
            return Err(Error::InvalidInterval {
                a,
                b,
                reason: "interval collapses under the spectrum map".into(),
            });
        }
        Ok(Self {
            a,
            b,
            alpha,
            beta,
            lo,
            hi,
            bounds,
        })
    }

    /// A step placed directly on `[-1, 1]`, i.e. with `l` the identity on
    /// the mapped axis. `a`, `b` are reported in singular-value units of a
    /// matrix with exact bounds `σ_max = 1`, `σ_min = 0`.
    pub fn on_unit_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(-1.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidInterval {
                a: lo,
                b: hi,
                reason: "need -1 <= lo < hi <= 1".into(),
            });
        }
        let bounds = SpectrumBounds::exact(1.0, 0.0)?;
        Ok(Self {
            a: ((lo + 1.0) / 2.0).sqrt(),
            b: ((hi + 1.0) / 2.0).sqrt(),
            alpha: lo.acos(),
            beta: hi.acos(),
            lo,
            hi,
            bounds,
        })
    }

    /// The step `h` on the mapped axis: 1 inside, 1/2 at the jumps, 0 outside.
    pub fn target(&self, x: f64) -> f64 {
        if x == self.lo || x == self.hi {
            0.5
        } else if self.lo < x && x < self.hi {
            1.0
        } else {
            0.0
        }
    }

    /// `f(σ²)` in singular-value units, with the 1/2 convention at `a`, `b`.
    pub fn target_sigma(&self, sigma: f64) -> f64 {
        if sigma == self.a || sigma == self.b {
            0.5
        } else if self.a < sigma && sigma < self.b {
            1.0
        } else {
            0.0
        }
    }
}

/// How the series degree is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DegreeChoice {
    Explicit(usize),
    /// Degree from the constant `D` of the heuristic `⌈Dπ²/(α−β)^{4/3}⌉ − 2`.
    Constant(f64),
}

/// A built filter `ψ_d`. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub step: StepSpec,
    pub degree: usize,
    /// `combined[0] = c₀` (halved), `combined[j] = ρ_{j,d} c_j`.
    pub combined: Vec<f64>,
    /// Unhalved Fourier coefficients `c_j`.
    pub fourier: Vec<f64>,
    pub damping: Vec<f64>,
}

/// Value of `ψ_d` together with whether `x` was inside `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarValue {
    pub value: f64,
    pub trusted: bool,
}

/// Chebyshev coefficients of the step with jumps at angles `alpha > beta`.
/// Index 0 holds the halved constant `(α − β)/π`.
pub fn fourier_coefficients(alpha: f64, beta: f64, d: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(d + 1);
    c.push((alpha - beta) / PI);
    for j in 1..=d {
        let jf = j as f64;
        c.push(2.0 / PI * ((jf * alpha).sin() - (jf * beta).sin()) / jf);
    }
    c
}

/// Jackson damping factors `ρ_{j,d}`, `j = 0..=d`, closed form.
pub fn jackson_factors(d: usize) -> Vec<f64> {
    let n = (d + 2) as f64;
    let zeta = PI / n;
    let (sz, cz) = zeta.sin_cos();
    (0..=d)
        .map(|j| {
            let jf = j as f64;
            ((n - jf) * sz * (jf * zeta).cos() + cz * (jf * zeta).sin()) / (n * sz)
        })
        .collect()
}

/// The same factors as autocorrelations `2 Σ t_ι t_{ι+j}` of the sine window
/// `t_ι ∝ sin((ι+1)π/(d+2))`.
pub fn jackson_factors_by_autocorrelation(d: usize) -> Vec<f64> {
    let n = (d + 2) as f64;
    let raw: Vec<f64> = (0..=d).map(|i| ((i + 1) as f64 * PI / n).sin()).collect();
    let denom = (2.0 * raw.iter().map(|t| t * t).sum::<f64>()).sqrt();
    let t: Vec<f64> = raw.iter().map(|x| x / denom).collect();
    (0..=d)
        .map(|j| 2.0 * (0..=(d - j)).map(|i| t[i] * t[i + j]).sum::<f64>())
        .collect()
}

/// `⌈x⌉` that treats values within a few ulps of an integer as that integer,
/// so products like `1.1 * 10.0` do not round up to the next count.
pub(crate) fn robust_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 8.0 * f64::EPSILON * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Degree heuristic `⌈Dπ²/(α−β)^{4/3}⌉ − 2`, floored at 1.
pub fn select_degree(alpha: f64, beta: f64, d_const: f64) -> usize {
    assert!(alpha > beta, "select_degree needs alpha > beta");
    assert!(d_const > 0.0, "select_degree needs D > 0");
    let raw = robust_ceil(d_const * PI * PI / (alpha - beta).powf(4.0 / 3.0)) - 2.0;
    if raw < 1.0 {
        1
    } else {
        raw as usize
    }
}

/// Pointwise error bound for `|ψ_d(cos θ) − h(cos θ)|`.
///
/// Passing `theta` exactly equal to `spec.alpha` or `spec.beta` selects the
/// jump-point form.
pub fn pointwise_error_bound(spec: &StepSpec, d: usize, theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta {theta} outside [0, pi]"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "error bounds need d >= 2, got {d}"
        )));
    }
    let lead = PI.powi(6) / (2.0 * ((d + 2) as f64).powi(3));
    let width = spec.alpha - spec.beta;
    let bound = if theta == spec.alpha {
        lead * (2.0 * PI - 2.0 * spec.alpha).powi(-4).max(width.powi(-4))
    } else if theta == spec.beta {
        lead * (2.0 * spec.beta).powi(-4).max(width.powi(-4))
    } else {
        let delta = (theta - spec.alpha).abs().min((theta - spec.beta).abs());
        lead / delta.powi(4)
    };
    Ok(bound)
}

/// Bound on `‖P_S − P‖` given the angular gap `delta_min` between the jumps and
/// the nearest singular values, inside or outside.
pub fn projector_error_bound(d: usize, delta_min: f64) -> Result<f64> {
    if !(delta_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_min must be positive, got {delta_min}"
        )));
    }
    Ok(PI.powi(6) / (2.0 * ((d + 2) as f64).powi(3) * delta_min.powi(4)))
}

/// Smallest degree `d ≥ 2` with `d ≥ ∛2 π² / Δ_min^{4/3} − 2`, which forces
/// the projector bound below 1/4.
pub fn quarter_accuracy_degree(delta_min: f64) -> Result<usize> {
    if !(delta_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_min must be positive, got {delta_min}"
        )));
    }
    let x = 2f64.cbrt() * PI * PI / delta_min.powf(4.0 / 3.0) - 2.0;
    Ok((x.ceil().max(2.0)) as usize)
}

impl FilterSpec {
    pub fn from_step(step: StepSpec, choice: DegreeChoice) -> Result<Self> {
        let degree = match choice {
            DegreeChoice::Explicit(d) => d,
            DegreeChoice::Constant(c) => {
                if !(c > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "degree constant must be positive, got {c}"
                    )));
                }
                select_degree(step.alpha, step.beta, c)
            }
        };
        let halved = fourier_coefficients(step.alpha, step.beta, degree);
        let damping = jackson_factors(degree);
        let combined: Vec<f64> = halved.iter().zip(&damping).map(|(c, r)| c * r).collect();
        let mut fourier = halved;
        fourier[0] *= 2.0;
        Ok(Self {
            step,
            degree,
            combined,
            fourier,
            damping,
        })
    }

    /// `ψ_d(x)` by Clenshaw summation; no clamping outside `[-1, 1]`.
    pub fn evaluate(&self, x: f64) -> f64 {
        clenshaw(&self.combined, x)
    }

    pub fn evaluate_scalar(&self, x: f64) -> ScalarValue {
        ScalarValue {
            value: self.evaluate(x),
            trusted: (-1.0..=1.0).contains(&x),
        }
    }

    /// `γ = ψ_d(l(σ²))`.
    pub fn evaluate_sigma(&self, sigma: f64) -> f64 {
        self.evaluate(self.step.bounds.map_sigma(sigma))
    }

    /// `P X`, where `P = Σ combined_j T_j(l(AᵀA))`, by the three-term
    /// recurrence. Exactly `2 d p` MVs for a `p`-column block.
    pub fn apply(&self, a: &SparseMatrix, x: &DenseBlock) -> Result<DenseBlock> {
        apply_filter(a, self, x)
    }
}

/// `Σ c_k T_k(x)`.
fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Computes `α`, `β`, resolves the degree and fills the coefficient arrays.
pub fn build_filter(
    bounds: SpectrumBounds,
    a: f64,
    b: f64,
    choice: DegreeChoice,
) -> Result<FilterSpec> {
    FilterSpec::from_step(StepSpec::new(bounds, a, b)?, choice)
}

/// `P X`; see [`FilterSpec::apply`].
pub fn apply_filter(a: &SparseMatrix, filter: &FilterSpec, x: &DenseBlock) -> Result<DenseBlock> {
    let n = a.cols();
    if x.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.rows(),
        });
    }
    if x.cols() == 0 {
        return Err(Error::InvalidArgument(
            "filter needs at least one column".into(),
        ));
    }
    let op = MappedGram::new(a, &filter.step.bounds)?;
    let mut out = DenseBlock::zeros(n, x.cols());
    if n == 0 {
        return Ok(out);
    }
    out.as_mut_slice()
        .par_chunks_mut(n)
        .zip(x.as_slice().par_chunks(n))
        .for_each(|(dst, src)| filter_column(&op, &filter.combined, src, dst));
    Ok(out)
}

/// One column of `P x`; the per-column operation order is fixed.
fn filter_column(op: &MappedGram<'_>, coeffs: &[f64], x: &[f64], dst: &mut [f64]) {
    let n = op.dim();
    let mut scratch = vec![0.0; op.a_rows()];
    for (d, s) in dst.iter_mut().zip(x) {
        *d = coeffs[0] * s;
    }
    if coeffs.len() == 1 {
        return;
    }
    let mut prev = x.to_vec();
    let mut cur = vec![0.0; n];
    op.apply_into(x, &mut cur, &mut scratch);
    crate::dense::axpy(coeffs[1], &cur, dst);
    let mut next = vec![0.0; n];
    for &cj in &coeffs[2..] {
        op.apply_into(&cur, &mut next, &mut scratch);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = 2.0 * *nx - p;
        }
        crate::dense::axpy(cj, &next, dst);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
}

/// `Σ_j combined_j · xᵀ T_j(l(S)) x` for one probe, accumulated term by term.
pub(crate) fn quadratic_form(op: &MappedGram<'_>, coeffs: &[f64], x: &[f64]) -> f64 {
    let n = op.dim();
    let dot = crate::dense::dot;
    let mut acc = coeffs[0] * dot(x, x);
    if coeffs.len() == 1 {
        return acc;
    }
    let mut scratch = vec![0.0; op.a_rows()];
    let mut prev = x.to_vec();
    let mut cur = vec![0.0; n];
    op.apply_into(x, &mut cur, &mut scratch);
    acc += coeffs[1] * dot(x, &cur);
    let mut next = vec![0.0; n];
    for &cj in &coeffs[2..] {
        op.apply_into(&cur, &mut next, &mut scratch);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = 2.0 * *nx - p;
        }
        acc += cj * dot(x, &next);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_step() -> StepSpec {
        StepSpec::on_unit_interval(-0.3, 0.5).unwrap()
    }

    #[test]
    fn whole_interval_coefficients() {
        let c = fourier_coefficients(PI, 0.0, 6);
        assert_eq!(c[0], 1.0);
        for cj in &c[1..] {
            assert!(cj.abs() < 1e-15);
        }
    }

    #[test]
    fn half_interval_coefficients() {
        let c = fourier_coefficients(PI / 2.0, 0.0, 2);
        assert_eq!(c[0], 0.5);
        assert!((c[1] - 2.0 / PI).abs() < 1e-15);
        assert!(c[2].abs() < 1e-16);
    }

    #[test]
    fn jackson_small_cases() {
        for d in [0, 1, 2, 7, 100] {
            assert!((jackson_factors(d)[0] - 1.0).abs() < 1e-15, "d={d}");
        }
        let r = jackson_factors(2);
        assert!((r[1] - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((r[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn jackson_forms_agree() {
        for d in 0..=200 {
            let a = jackson_factors(d);
            let b = jackson_factors_by_autocorrelation(d);
            for (j, (x, y)) in a.iter().zip(&b).enumerate() {
                assert!((x - y).abs() <= 1e-12, "d={d} j={j}: {x} vs {y}");
                assert!(*x > 0.0 && *x <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn degree_heuristic_floor() {
        assert_eq!(select_degree(PI, 0.0, 0.01), 1);
    }

    #[test]
    fn robust_ceil_absorbs_rounding() {
        assert_eq!(robust_ceil(1.1 * 10.0), 11.0);
        assert_eq!(robust_ceil(7.32), 8.0);
        assert_eq!(robust_ceil(3.0), 3.0);
    }

    #[test]
    fn whole_interval_filter_is_identity() {
        let bounds = SpectrumBounds::exact(2.0, 1.0).unwrap();
        let f = build_filter(bounds, 1.0, 2.0, DegreeChoice::Explicit(8)).unwrap();
        assert_eq!(f.combined[0], 1.0);
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((f.evaluate(x) - 1.0).abs() < 1e-14);
        }
        let a = SparseMatrix::diagonal(&[1.0, 1.5, 2.0]);
        let x = DenseBlock::identity(3);
        let y = f.apply(&a, &x).unwrap();
        assert!(y.sub(&x).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn invalid_intervals_are_rejected() {
        let bounds = SpectrumBounds::exact(5.0, 1.0).unwrap();
        assert!(build_filter(bounds, 2.0, 2.0, DegreeChoice::Constant(2.0)).is_err());
        assert!(build_filter(bounds, 3.0, 2.0, DegreeChoice::Constant(2.0)).is_err());
        assert!(build_filter(bounds, 0.5, 2.0, DegreeChoice::Constant(2.0)).is_err());
        assert!(build_filter(bounds, 2.0, 6.0, DegreeChoice::Constant(2.0)).is_err());
    }

    #[test]
    fn pointwise_bound_substitution() {
        let spec = unit_step();
        // theta chosen with delta_theta = 0.5 from beta
        let theta = spec.beta - 0.5;
        let b = pointwise_error_bound(&spec, 98, theta).unwrap();
        let expect = PI.powi(6) / (2.0 * 1e6 * 0.0625);
        assert!((b - expect).abs() < 1e-15 * expect);
        assert!((b - 7.691e-3).abs() < 1e-6);
        let b2 = pointwise_error_bound(&spec, 198, theta).unwrap();
        assert!((b / b2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_bound_rejects_bad_input() {
        let spec = unit_step();
        assert!(pointwise_error_bound(&spec, 10, -0.1).is_err());
        assert!(pointwise_error_bound(&spec, 10, 3.2).is_err());
        assert!(pointwise_error_bound(&spec, 1, 1.0).is_err());
    }

    #[test]
    fn jump_point_values() {
        let spec = unit_step();
        let f = FilterSpec::from_step(spec, DegreeChoice::Explicit(400)).unwrap();
        for (x, theta) in [(spec.lo, spec.alpha), (spec.hi, spec.beta)] {
            let err = (f.evaluate(x) - 0.5).abs();
            assert!(err <= pointwise_error_bound(&spec, 400, theta).unwrap());
        }
    }

    #[test]
    fn far_exterior_value_within_bound() {
        let spec = unit_step();
        let f = FilterSpec::from_step(spec, DegreeChoice::Explicit(1000)).unwrap();
        let v = f.evaluate(-0.9);
        let delta = ((-0.9f64).acos() - (-0.3f64).acos()).abs();
        let bound = PI.powi(6) / (2.0 * 1002f64.powi(3) * delta.powi(4));
        assert!(v.abs() <= bound, "{v} > {bound}");
    }

    #[test]
    fn projector_bound_and_threshold() {
        let d = quarter_accuracy_degree(0.2).unwrap();
        assert!(projector_error_bound(d, 0.2).unwrap() < 0.25);
        assert!(projector_error_bound(d - 1, 0.2).unwrap() >= 0.25);
        assert!(projector_error_bound(10, 0.0).is_err());
        assert!(projector_error_bound(10, -1.0).is_err());
    }

    #[test]
    fn untrusted_outside_unit_interval() {
        let f = FilterSpec::from_step(unit_step(), DegreeChoice::Explicit(20)).unwrap();
        assert!(f.evaluate_scalar(0.2).trusted);
        let out = f.evaluate_scalar(-1.2);
        assert!(!out.trusted);
        assert!(out.value.is_finite());
    }

    #[test]
    fn quadratic_form_matches_filtered_dot() {
        let a = SparseMatrix::from_triplets(
            4,
            3,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (3, 0, 0.5)],
        )
        .unwrap();
        let bounds = SpectrumBounds::exact(3.5, 0.5).unwrap();
        let f = build_filter(bounds, 1.5, 2.5, DegreeChoice::Explicit(15)).unwrap();
        let z = vec![1.0, -1.0, 1.0];
        let px = f
            .apply(
                &a,
                &DenseBlock::from_columns(3, std::slice::from_ref(&z)).unwrap(),
            )
            .unwrap();
        let op = MappedGram::new(&a, &bounds).unwrap();
        let q = quadratic_form(&op, &f.combined, &z);
        assert!((q - crate::dense::dot(&z, px.col(0))).abs() < 1e-13);
    }
}
