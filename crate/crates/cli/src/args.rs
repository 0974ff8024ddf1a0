use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cjfeast",
    version,
    about = "Singular triplets of a sparse matrix in a given interval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute all singular triplets with sigma in the interval.
    Solve(SolveArgs),
    /// Estimate the number of singular values in the interval.
    Count(CountArgs),
    /// Print the filter coefficients and optionally sample the filter.
    FilterDump(FilterDumpArgs),
    /// Solve, then check the result against a dense SVD (n <= 500).
    Verify(SolveArgs),
    /// Download a matrix from the collection mirror into the local cache.
    Fetch(FetchArgs),
}

/// `a,b` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

pub fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected a,b but got {s:?}"))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("invalid lower endpoint {a:?}"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("invalid upper endpoint {b:?}"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("need finite a < b, got {a},{b}"));
    }
    if a < 0.0 {
        return Err(format!("singular values are nonnegative, got a = {a}"));
    }
    Ok(Interval(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl SeedArg {
    pub fn resolve(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => rand::random(),
        }
    }
}

pub fn parse_seed(s: &str) -> Result<SeedArg, String> {
    if s.eq_ignore_ascii_case("random") {
        return Ok(SeedArg::Random);
    }
    s.parse()
        .map(SeedArg::Fixed)
        .map_err(|_| format!("seed must be an unsigned integer or \"random\", got {s:?}"))
}

/// Options shared by every subcommand that builds a filter.
#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    /// Matrix Market coordinate file.
    pub matrix: PathBuf,

    /// Target interval as `a,b`.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub interval: Interval,

    /// Degree constant D in the automatic degree rule.
    #[arg(long = "cap-D", default_value_t = 2.0)]
    pub cap_d: f64,

    /// Explicit series degree; overrides --cap-D.
    #[arg(long)]
    pub degree: Option<usize>,

    /// Seed for all random draws, or `random`.
    #[arg(long, value_parser = parse_seed, default_value_t = default_seed_arg())]
    pub seed: SeedArg,

    /// Golub-Kahan steps for the spectrum bounds.
    #[arg(long, default_value_t = 30)]
    pub bidiag_steps: usize,

    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

fn default_seed_arg() -> SeedArg {
    SeedArg::Fixed(cjfeast::solver::DEFAULT_SEED)
}

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedArg::Fixed(s) => write!(f, "{s}"),
            SeedArg::Random => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub filter: FilterArgs,

    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    /// Oversampling factor for the subspace dimension.
    #[arg(long, default_value_t = 1.2)]
    pub mu: f64,

    /// Explicit subspace dimension p; overrides --mu.
    #[arg(long)]
    pub dimension: Option<usize>,

    /// Probe vectors for the trace estimate.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,

    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,

    /// Relative widening of the interval for the membership test.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,

    /// JSON report path; the history CSV goes next to it with a .csv extension.
    /// Defaults to `<matrix stem>-report.json` in the working directory.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Include singular vectors in the JSON report.
    #[arg(long)]
    pub emit_vectors: bool,

    /// Check the result against a dense SVD (n <= 500).
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub filter: FilterArgs,

    #[arg(long, default_value_t = 20)]
    pub samples: usize,

    /// Also write the JSON to this path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FilterDumpArgs {
    #[command(flatten)]
    pub filter: FilterArgs,

    /// Sample the filter at this many equispaced points of [-1, 1].
    #[arg(long, default_value_t = 0)]
    pub points: usize,

    /// Also write the JSON to this path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FetchArgs {
    /// Collection name such as `plat1919`, or `Group/Name`.
    pub name: String,

    /// Cache directory; defaults to $CJFEAST_CACHE or ~/.cache/cjfeast.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,

    /// Archive URL with `{group}` and `{name}` placeholders; defaults to
    /// $CJFEAST_MIRROR or the public collection.
    #[arg(long)]
    pub url_template: Option<String>,
}
