//! Hutchinson estimation of `tr(P)` with Rademacher probes, used as the count
//! of singular values inside the interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseBlock;
use crate::error::{Error, Result};
use crate::filter::{quadratic_form, robust_ceil, FilterSpec};
use crate::sparse::{MappedGram, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    /// `H_M = (1/M) Σ zᵢᵀ P zᵢ`.
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    pub degree: usize,
    /// `2 M d`.
    pub mv_cost: u64,
    /// Individual quadratic forms `zᵢᵀ P zᵢ` in probe order.
    pub quadratic_forms: Vec<f64>,
}

impl TraceEstimate {
    /// Sample standard deviation of the individual quadratic forms.
    pub fn sample_std(&self) -> f64 {
        let m = self.quadratic_forms.len();
        if m < 2 {
            return 0.0;
        }
        let mean = self.value;
        let var = self
            .quadratic_forms
            .iter()
            .map(|q| (q - mean) * (q - mean))
            .sum::<f64>()
            / (m - 1) as f64;
        var.sqrt()
    }
}

/// `n x M` block of ±1 entries; identical for identical `(n, M, seed)`.
pub fn rademacher_block(n: usize, samples: usize, seed: u64) -> DenseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * samples)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    DenseBlock::from_col_major(n, samples, data).expect("sized by construction")
}

/// Runs the Chebyshev recurrence once per probe; `P` is never assembled.
pub fn estimate_trace(
    a: &SparseMatrix,
    filter: &FilterSpec,
    samples: usize,
    seed: u64,
) -> Result<TraceEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "trace estimation needs at least one sample".into(),
        ));
    }
    let op = MappedGram::new(a, &filter.step.bounds)?;
    let probes = rademacher_block(a.cols(), samples, seed);
    let quadratic_forms: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| quadratic_form(&op, &filter.combined, probes.col(i)))
        .collect();
    let value = quadratic_forms.iter().sum::<f64>() / samples as f64;
    Ok(TraceEstimate {
        value,
        samples,
        seed,
        degree: filter.degree,
        mv_cost: 2 * samples as u64 * filter.degree as u64,
        quadratic_forms,
    })
}

/// `p = ⌈μ H_M⌉`, at least 1.
pub fn select_subspace_dimension(estimate: &TraceEstimate, mu: f64) -> usize {
    dimension_for(estimate.value, mu)
}

pub fn dimension_for(h: f64, mu: f64) -> usize {
    assert!(mu >= 1.0, "mu must be at least 1");
    let p = robust_ceil(mu * h);
    if p < 1.0 {
        1
    } else {
        p as usize
    }
}

/// Smallest `M` with `Pr(|H_M − tr P| ≥ ε tr P) ≤ δ`, given a guess of
/// `‖P‖ / tr(P)`.
pub fn min_samples(epsilon: f64, delta: f64, norm_over_trace: f64) -> Result<usize> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0 && norm_over_trace > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need epsilon > 0, 0 < delta < 1, ratio > 0; got {epsilon}, {delta}, {norm_over_trace}"
        )));
    }
    let m = 8.0 / (epsilon * epsilon) * (1.0 + epsilon) * (2.0 / delta).ln() * norm_over_trace;
    Ok(m.ceil().max(1.0) as usize)
}
