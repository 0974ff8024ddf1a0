//! Filtered subspace iteration with two-sided Rayleigh–Ritz extraction.

use std::borrow::Cow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::{axpy, norm, svd_small, thin_qr, thin_qr_unchecked, DenseBlock};
use crate::error::{Error, Result};
use crate::filter::{apply_filter, build_filter, DegreeChoice, FilterSpec};
use crate::sparse::{estimate_spectrum_bounds_with, BoundsConfig, SparseMatrix, SpectrumBounds};
use crate::trace::{dimension_for, estimate_trace, TraceEstimate};

pub const DEFAULT_SEED: u64 = 0x5eed_cafe;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const HISTORY_CSV_HEADER: &str = "k,max_residual,min_residual,cumulative_mvs";

/// Iterations inspected by the stagnation check.
pub const STAGNATION_WINDOW: usize = 10;
/// Minimum max-residual reduction over the window.
pub const STAGNATION_FACTOR: f64 = 10.0;

const TRACE_SEED_OFFSET: u64 = 1;
const BLOCK_SEED_OFFSET: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Degree constant `D`.
    pub degree_constant: f64,
    pub degree: Option<usize>,
    pub mu: f64,
    /// Subspace dimension `p`; estimated from the trace when absent.
    pub dimension: Option<usize>,
    /// Probe count `M`.
    pub samples: usize,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub bidiag_steps: usize,
    pub inflate: f64,
    pub trust_unconverged_min: bool,
    /// Relative widening of `[a, b]` for the membership test, in units of `b − a`.
    pub margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            degree_constant: 2.0,
            degree: None,
            mu: 1.2,
            dimension: None,
            samples: 20,
            tol: 1e-8,
            max_iterations: 100,
            seed: DEFAULT_SEED,
            bidiag_steps: 30,
            inflate: 0.05,
            trust_unconverged_min: false,
            margin: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.mu >= 1.0) {
            return bad(format!("mu must be at least 1, got {}", self.mu));
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1".into());
        }
        if self.samples < 1 {
            return bad("samples must be at least 1".into());
        }
        if !(self.degree_constant > 0.0) {
            return bad(format!(
                "degree constant must be positive, got {}",
                self.degree_constant
            ));
        }
        if self.degree == Some(0) {
            return bad("degree must be at least 1".into());
        }
        if self.dimension == Some(0) {
            return bad("subspace dimension must be at least 1".into());
        }
        if !(self.margin >= 0.0) {
            return bad(format!("margin must be nonnegative, got {}", self.margin));
        }
        Ok(())
    }

    fn degree_choice(&self) -> DegreeChoice {
        match self.degree {
            Some(d) => DegreeChoice::Explicit(d),
            None => DegreeChoice::Constant(self.degree_constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `‖Aᵀu − σv‖`.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Descending.
    pub ritz_values_in_interval: Vec<f64>,
    /// `None` when no Ritz value lies in the interval.
    pub max_residual: Option<f64>,
    pub min_residual: Option<f64>,
    /// MVs since the start of the solve, bounds and trace included.
    pub cumulative_mvs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MvBreakdown {
    pub bounds: u64,
    pub trace: u64,
    pub iterations: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub schema_version: u32,
    pub converged: bool,
    pub stagnated: bool,
    pub iterations: usize,
    /// Descending in `sigma`.
    pub triplets: Vec<RitzTriplet>,
    pub history: Vec<IterationRecord>,
    pub filter: FilterSpec,
    pub trace: TraceEstimate,
    pub p: usize,
    pub warnings: Vec<String>,
    pub bounds: SpectrumBounds,
    /// `‖A‖` used in the stopping rule.
    pub norm_estimate: f64,
    /// Requested interval.
    pub interval: (f64, f64),
    /// Interval the filter was built on, after clipping to the bounds.
    pub filter_interval: (f64, f64),
    pub rows: usize,
    pub cols: usize,
    pub mvs: MvBreakdown,
    pub options: SolverOptions,
}

impl SolverReport {
    /// JSON value of the report; vectors are dropped unless requested.
    pub fn to_json_value(&self, emit_vectors: bool) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report is serializable");
        if !emit_vectors {
            if let Some(list) = value.get_mut("triplets").and_then(|t| t.as_array_mut()) {
                for t in list {
                    if let Some(obj) = t.as_object_mut() {
                        obj.remove("u");
                        obj.remove("v");
                    }
                }
            }
        }
        value
    }

    pub fn to_json(&self, emit_vectors: bool) -> String {
        serde_json::to_string_pretty(&self.to_json_value(emit_vectors))
            .expect("report is serializable")
    }

    /// History as CSV with [`HISTORY_CSV_HEADER`]; absent residuals are empty fields.
    pub fn history_csv(&self) -> String {
        let fmt = |r: Option<f64>| r.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from(HISTORY_CSV_HEADER);
        out.push('\n');
        for rec in &self.history {
            out.push_str(&format!(
                "{},{},{},{}\n",
                rec.k,
                fmt(rec.max_residual),
                fmt(rec.min_residual),
                rec.cumulative_mvs
            ));
        }
        out
    }
}

/// `‖Aᵀu − σv‖` (one MV).
pub fn residual_norm(a: &SparseMatrix, sigma: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: u.len(),
        });
    }
    if v.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: v.len(),
        });
    }
    for (name, x) in [("u", u), ("v", v)] {
        let nx = norm(x);
        if (nx - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "{name} must have unit norm, got {nx}"
            )));
        }
    }
    let mut r = a.apply_transpose(u)?;
    axpy(-sigma, v, &mut r);
    Ok(norm(&r))
}

/// Gaussian `n x p` block with orthonormalized columns.
pub fn initial_block(n: usize, p: usize, seed: u64) -> Result<DenseBlock> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * p)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let g = DenseBlock::from_col_major(n, p, data)?;
    Ok(thin_qr(&g)?.q)
}

/// Spectrum bounds and the filter built on the clipped interval.
#[derive(Debug, Clone)]
pub struct FilterSetup {
    pub bounds: SpectrumBounds,
    pub filter: FilterSpec,
    pub filter_interval: (f64, f64),
    pub warnings: Vec<String>,
}

/// The first two solver stages on their own: bounds estimation and filter
/// construction, with the same orientation, seeds and clipping as [`solve`].
pub fn setup_filter(
    a: &SparseMatrix,
    lo: f64,
    hi: f64,
    opts: &SolverOptions,
) -> Result<FilterSetup> {
    opts.validate()?;
    if a.rows() < a.cols() {
        setup_oriented(&a.transpose(), lo, hi, opts)
    } else {
        setup_oriented(a, lo, hi, opts)
    }
}

fn setup_oriented(a: &SparseMatrix, lo: f64, hi: f64, opts: &SolverOptions) -> Result<FilterSetup> {
    if !(lo < hi) {
        return Err(Error::InvalidInterval {
            a: lo,
            b: hi,
            reason: "need a < b".into(),
        });
    }
    let cfg = BoundsConfig {
        steps: opts.bidiag_steps,
        inflate: opts.inflate,
        trust_unconverged_min: opts.trust_unconverged_min,
    };
    let bounds = estimate_spectrum_bounds_with(a, &cfg, opts.seed)?;
    let clip_lo = lo.max(bounds.sigma_min_est);
    let clip_hi = hi.min(bounds.sigma_max_est);
    if !(clip_lo < clip_hi) {
        return Err(Error::InvalidInterval {
            a: lo,
            b: hi,
            reason: format!(
                "no overlap with estimated spectrum [{}, {}]",
                bounds.sigma_min_est, bounds.sigma_max_est
            ),
        });
    }
    let mut warnings = Vec::new();
    if clip_lo != lo || clip_hi != hi {
        warnings.push(format!(
            "interval [{lo}, {hi}] clipped to estimated spectrum: filter built on [{clip_lo}, {clip_hi}]"
        ));
    }
    let filter = build_filter(bounds, clip_lo, clip_hi, opts.degree_choice())?;
    Ok(FilterSetup {
        bounds,
        filter,
        filter_interval: (clip_lo, clip_hi),
        warnings,
    })
}

/// Solver state between iterations.
///
/// Works on a matrix with at least as many rows as columns; a wide input is
/// transposed on entry and the roles of `u` and `v` are swapped on output.
pub struct Solver<'a> {
    a: Cow<'a, SparseMatrix>,
    transposed: bool,
    opts: SolverOptions,
    interval: (f64, f64),
    filter_interval: (f64, f64),
    member: (f64, f64),
    bounds: SpectrumBounds,
    filter: FilterSpec,
    trace: TraceEstimate,
    p: usize,
    v_hat: DenseBlock,
    u_hat: DenseBlock,
    ritz: Vec<f64>,
    residuals: Vec<f64>,
    history: Vec<IterationRecord>,
    warnings: Vec<String>,
    mv_start: u64,
    setup_mvs: (u64, u64),
    converged: bool,
    rank_warning: bool,
}

impl<'a> Solver<'a> {
    /// Bounds, filter, trace estimate and the random starting block.
    pub fn new(a: &'a SparseMatrix, lo: f64, hi: f64, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        if !(lo < hi) {
            return Err(Error::InvalidInterval {
                a: lo,
                b: hi,
                reason: "need a < b".into(),
            });
        }
        let transposed = a.rows() < a.cols();
        let a: Cow<'a, SparseMatrix> = if transposed {
            Cow::Owned(a.transpose())
        } else {
            Cow::Borrowed(a)
        };
        let n = a.cols();
        let mv_start = a.mv_count();
        let FilterSetup {
            bounds,
            filter,
            filter_interval: (clip_lo, clip_hi),
            mut warnings,
        } = setup_oriented(&a, lo, hi, &opts)?;
        let bounds_mvs = a.mv_count() - mv_start;

        let before_trace = a.mv_count();
        let trace = estimate_trace(
            &a,
            &filter,
            opts.samples,
            opts.seed.wrapping_add(TRACE_SEED_OFFSET),
        )?;
        let trace_mvs = a.mv_count() - before_trace;

        let mut p = match opts.dimension {
            Some(p) => p,
            None => dimension_for(trace.value, opts.mu),
        };
        if p > n {
            warnings.push(format!(
                "subspace dimension {p} exceeds matrix order {n}; using {n}"
            ));
            p = n;
        }
        if p == 0 {
            return Err(Error::InvalidArgument(
                "subspace dimension resolved to 0".into(),
            ));
        }
        let v_hat = initial_block(n, p, opts.seed.wrapping_add(BLOCK_SEED_OFFSET))?;

        let w = opts.margin * (hi - lo);
        Ok(Self {
            u_hat: DenseBlock::zeros(a.rows(), p),
            a,
            transposed,
            interval: (lo, hi),
            filter_interval: (clip_lo, clip_hi),
            member: (lo - w, hi + w),
            bounds,
            filter,
            trace,
            p,
            v_hat,
            ritz: Vec::new(),
            residuals: Vec::new(),
            history: Vec::new(),
            warnings,
            mv_start,
            setup_mvs: (bounds_mvs, trace_mvs),
            converged: false,
            rank_warning: false,
            opts,
        })
    }

    /// One filter application plus Rayleigh–Ritz: `2(d+1)p` MVs.
    pub fn iterate_once(&mut self) -> Result<&IterationRecord> {
        let a: &SparseMatrix = &self.a;
        let y = apply_filter(a, &self.filter, &self.v_hat)?;
        let q1 = match thin_qr(&y) {
            Ok(f) => f.q,
            Err(Error::RankDeficient { column: 0 }) => {
                return Err(Error::RankDeficient { column: 0 })
            }
            Err(Error::RankDeficient { column }) => {
                if !self.rank_warning {
                    self.rank_warning = true;
                    self.warnings.push(format!(
                        "filtered block numerically rank deficient at column {column}; \
                         p exceeds the number of non-negligible projector eigenvalues"
                    ));
                }
                thin_qr_unchecked(&y).q
            }
            Err(e) => return Err(e),
        };
        let b = a.apply_block(&q1)?;
        let qr2 = thin_qr_unchecked(&b);
        let small = svd_small(&qr2.r)?;
        self.u_hat = qr2.q.matmul(&small.u)?;
        self.v_hat = q1.matmul(&small.v)?;
        self.ritz = small.s;

        let atu = a.apply_transpose_block(&self.u_hat)?;
        self.residuals = (0..self.p)
            .map(|i| {
                let mut r = atu.col(i).to_vec();
                axpy(-self.ritz[i], self.v_hat.col(i), &mut r);
                norm(&r)
            })
            .collect();

        let inside = self.inside_indices();
        let res_in: Vec<f64> = inside.iter().map(|&i| self.residuals[i]).collect();
        let record = IterationRecord {
            k: self.history.len() + 1,
            ritz_values_in_interval: inside.iter().map(|&i| self.ritz[i]).collect(),
            max_residual: res_in.iter().copied().reduce(f64::max),
            min_residual: res_in.iter().copied().reduce(f64::min),
            cumulative_mvs: a.mv_count() - self.mv_start,
        };
        let threshold = self.norm_estimate() * self.opts.tol;
        let stable = self.history.last().is_some_and(|prev| {
            prev.ritz_values_in_interval.len() == record.ritz_values_in_interval.len()
        });
        self.converged = stable && res_in.iter().all(|&r| r <= threshold);
        self.history.push(record);
        Ok(self.history.last().expect("just pushed"))
    }

    /// Iterates until convergence or the iteration cap, then builds the report.
    pub fn run(mut self) -> Result<SolverReport> {
        while !self.converged && self.history.len() < self.opts.max_iterations {
            self.iterate_once()?;
        }
        Ok(self.into_report())
    }

    pub fn into_report(mut self) -> SolverReport {
        let stagnated = !self.converged && self.stagnation_detected();
        if stagnated {
            self.warnings.push(format!(
                "max residual fell by less than {STAGNATION_FACTOR}x over the last {STAGNATION_WINDOW} iterations; \
                 the subspace dimension p = {} is probably smaller than the number of singular values in the \
                 interval, rerun with a larger mu or dimension",
                self.p
            ));
        }
        let triplets = self
            .inside_indices()
            .into_iter()
            .map(|i| {
                let (u, v) = (self.u_hat.col(i).to_vec(), self.v_hat.col(i).to_vec());
                let (u, v) = if self.transposed { (v, u) } else { (u, v) };
                RitzTriplet {
                    sigma: self.ritz[i],
                    u,
                    v,
                    residual_norm: self.residuals[i],
                }
            })
            .collect();
        let total = self.a.mv_count() - self.mv_start;
        let (bounds_mvs, trace_mvs) = self.setup_mvs;
        let (rows, cols) = if self.transposed {
            (self.a.cols(), self.a.rows())
        } else {
            (self.a.rows(), self.a.cols())
        };
        SolverReport {
            schema_version: REPORT_SCHEMA_VERSION,
            converged: self.converged,
            stagnated,
            iterations: self.history.len(),
            triplets,
            norm_estimate: self.norm_estimate(),
            history: self.history,
            filter: self.filter,
            trace: self.trace,
            p: self.p,
            warnings: self.warnings,
            bounds: self.bounds,
            interval: self.interval,
            filter_interval: self.filter_interval,
            rows,
            cols,
            mvs: MvBreakdown {
                bounds: bounds_mvs,
                trace: trace_mvs,
                iterations: total - bounds_mvs - trace_mvs,
                total,
            },
            options: self.opts,
        }
    }

    fn inside_indices(&self) -> Vec<usize> {
        let (lo, hi) = self.member;
        (0..self.ritz.len())
            .filter(|&i| lo <= self.ritz[i] && self.ritz[i] <= hi)
            .collect()
    }

    fn stagnation_detected(&self) -> bool {
        let h = &self.history;
        if h.len() <= STAGNATION_WINDOW {
            return false;
        }
        let old = h[h.len() - 1 - STAGNATION_WINDOW].max_residual;
        let new = h[h.len() - 1].max_residual;
        match (old, new) {
            (Some(old), Some(new)) => new * STAGNATION_FACTOR > old,
            _ => false,
        }
    }

    pub fn norm_estimate(&self) -> f64 {
        self.bounds.raw_max
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// The matrix actually iterated on (transposed when the input was wide).
    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// Current right basis `V̂` (`n x p`), spanning the last `Q₁`.
    pub fn right_basis(&self) -> &DenseBlock {
        &self.v_hat
    }

    /// Current left basis `Û`; zero before the first iteration.
    pub fn left_basis(&self) -> &DenseBlock {
        &self.u_hat
    }

    /// All `p` Ritz values, descending.
    pub fn ritz_values(&self) -> &[f64] {
        &self.ritz
    }

    /// Residual norms matching [`Self::ritz_values`].
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    pub fn trace(&self) -> &TraceEstimate {
        &self.trace
    }

    pub fn bounds(&self) -> &SpectrumBounds {
        &self.bounds
    }

    pub fn dimension(&self) -> usize {
        self.p
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `(bounds, trace)` MV counts spent before the first iteration.
    pub fn setup_mvs(&self) -> (u64, u64) {
        self.setup_mvs
    }

    pub fn mvs_so_far(&self) -> u64 {
        self.a.mv_count() - self.mv_start
    }
}

/// Singular triplets of `a` with `σ ∈ [lo, hi]`.
pub fn solve(a: &SparseMatrix, lo: f64, hi: f64, opts: SolverOptions) -> Result<SolverReport> {
    Solver::new(a, lo, hi, opts)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag5() -> SparseMatrix {
        SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0])
    }

    #[test]
    fn residual_examples() {
        let a = SparseMatrix::diagonal(&[3.0, 4.0]);
        assert!(residual_norm(&a, 3.0, &[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-15);
        let r = residual_norm(&a, 3.0, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((r - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(residual_norm(&a, 3.0, &[1.0], &[1.0, 0.0]).is_err());
        assert!(residual_norm(&a, 3.0, &[2.0, 0.0], &[1.0, 0.0]).is_err());
        assert_eq!(a.mv_count(), 2);
    }

    #[test]
    fn diag_example() {
        let a = diag5();
        let opts = SolverOptions {
            tol: 1e-12,
            degree_constant: 4.0,
            mu: 1.5,
            ..SolverOptions::default()
        };
        let rep = solve(&a, 1.5, 3.5, opts).unwrap();
        assert!(rep.converged, "{:?}", rep.warnings);
        assert_eq!(rep.triplets.len(), 2);
        for (t, (s, idx)) in rep.triplets.iter().zip([(3.0, 2), (2.0, 1)]) {
            assert!((t.sigma - s).abs() < 1e-10);
            assert!(t.residual_norm <= 5e-12);
            assert!((t.u[idx].abs() - 1.0).abs() < 1e-10);
            assert!((t.v[idx].abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mv_increment_per_iteration() {
        let a = diag5();
        let mut s = Solver::new(&a, 1.5, 3.5, SolverOptions::default()).unwrap();
        let (d, p) = (s.filter().degree as u64, s.dimension() as u64);
        let before = s.mvs_so_far();
        s.iterate_once().unwrap();
        assert_eq!(s.mvs_so_far() - before, 2 * (d + 1) * p);
        let (bm, tm) = s.setup_mvs();
        assert_eq!(tm, 2 * 20 * d);
        assert_eq!(bm + tm, before);
    }

    #[test]
    fn wide_input_is_transposed() {
        let a = SparseMatrix::from_triplets(2, 4, &[(0, 1, 2.0), (1, 3, 5.0)]).unwrap();
        let rep = solve(&a, 1.0, 3.0, SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.triplets.len(), 1);
        let t = &rep.triplets[0];
        assert_eq!((t.u.len(), t.v.len()), (2, 4));
        assert!((t.sigma - 2.0).abs() < 1e-12);
        assert!((t.u[0].abs() - 1.0).abs() < 1e-12);
        assert!((t.v[1].abs() - 1.0).abs() < 1e-12);
        assert_eq!((rep.rows, rep.cols), (2, 4));
    }

    #[test]
    fn empty_interval_converges_with_no_triplets() {
        let a = diag5();
        let rep = solve(&a, 2.3, 2.7, SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.triplets.is_empty());
    }

    #[test]
    fn interval_outside_spectrum_rejected() {
        let a = diag5();
        assert!(matches!(
            solve(&a, 10.0, 11.0, SolverOptions::default()),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(solve(&a, 3.0, 2.0, SolverOptions::default()).is_err());
    }

    #[test]
    fn clipping_warns() {
        let a = diag5();
        let rep = solve(&a, 4.5, 100.0, SolverOptions::default()).unwrap();
        assert!(rep.warnings.iter().any(|w| w.contains("clipped")));
        assert_eq!(rep.triplets.len(), 1);
    }

    #[test]
    fn option_validation() {
        let a = diag5();
        for opts in [
            SolverOptions {
                tol: 0.0,
                ..Default::default()
            },
            SolverOptions {
                mu: 0.5,
                ..Default::default()
            },
            SolverOptions {
                max_iterations: 0,
                ..Default::default()
            },
            SolverOptions {
                dimension: Some(0),
                ..Default::default()
            },
        ] {
            assert!(matches!(
                solve(&a, 1.5, 3.5, opts),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn deterministic_and_serializable() {
        let a = diag5();
        let r1 = solve(&a, 1.5, 3.5, SolverOptions::default()).unwrap();
        let r2 = solve(&a, 1.5, 3.5, SolverOptions::default()).unwrap();
        assert_eq!(r1, r2);
        let brief: serde_json::Value = serde_json::from_str(&r1.to_json(false)).unwrap();
        assert!(brief["triplets"][0].get("u").is_none());
        let full: SolverReport = serde_json::from_str(&r1.to_json(true)).unwrap();
        assert_eq!(full, r1);
        let csv = r1.history_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(HISTORY_CSV_HEADER));
        assert_eq!(lines.count(), r1.history.len());
    }
}
