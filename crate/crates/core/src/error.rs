use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("matrix market line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bidiagonalization broke down before completing a single step")]
    BoundsBreakdown,

    #[error("degenerate spectrum bounds: sigma_max_est={max} sigma_min_est={min}")]
    DegenerateBounds { max: f64, min: f64 },

    #[error("interval [{a}, {b}] is invalid: {reason}")]
    InvalidInterval { a: f64, b: f64, reason: String },

    #[error("block is numerically rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense oracle limited to {cap} columns, got {found}")]
    OracleSizeCap { cap: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
