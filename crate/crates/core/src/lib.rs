//! Singular triplets of a large sparse matrix with singular values in a given
//! interval, by subspace iteration on a polynomial approximation of the
//! spectral projector of `AᵀA`.
//!
//! ```
//! use cjfeast::{solve, SolverOptions, SparseMatrix};
//!
//! let a = SparseMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
//! let report = solve(&a, 1.5, 3.5, SolverOptions::default()).unwrap();
//! assert!(report.converged);
//! assert_eq!(report.triplets.len(), 2);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod error;
pub mod filter;
pub mod oracle;
pub mod solver;
pub mod sparse;
pub mod trace;

pub use dense::{svd_small, thin_qr, DenseBlock, SmallSvd, ThinQr};
pub use error::{Error, Result};
pub use filter::{apply_filter, build_filter, select_degree, DegreeChoice, FilterSpec, StepSpec};
pub use solver::{
    residual_norm, solve, IterationRecord, RitzTriplet, Solver, SolverOptions, SolverReport,
};
pub use sparse::{
    estimate_spectrum_bounds, parse_matrix_market, read_matrix_market_file, write_matrix_market,
    SparseMatrix, SpectrumBounds,
};
pub use trace::{estimate_trace, select_subspace_dimension, TraceEstimate};
