use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use cjfeast::oracle::{count_in_interval, sparse_full_svd, ORACLE_MAX_COLS};
use cjfeast::solver::{setup_filter, Solver};
use cjfeast::trace::dimension_for;
use cjfeast::{read_matrix_market_file, SolverOptions, SolverReport, SparseMatrix};

use crate::args::{Command, CountArgs, FetchArgs, FilterArgs, FilterDumpArgs, SolveArgs};
use crate::{exit, fetch, Cli, CliError};

pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify(mut args) => {
            args.verify = true;
            cmd_solve(&args)
        }
        Command::Count(args) => cmd_count(&args),
        Command::FilterDump(args) => cmd_filter_dump(&args),
        Command::Fetch(args) => cmd_fetch(&args),
    }
}

fn configure_threads(threads: usize) {
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn load_matrix(path: &Path) -> Result<SparseMatrix, CliError> {
    read_matrix_market_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn base_options(f: &FilterArgs) -> SolverOptions {
    SolverOptions {
        degree_constant: f.cap_d,
        degree: f.degree,
        seed: f.seed.resolve(),
        bidiag_steps: f.bidiag_steps,
        ..SolverOptions::default()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn report_paths(args: &SolveArgs) -> (PathBuf, PathBuf) {
    let json = args.output.clone().unwrap_or_else(|| {
        let stem = args
            .filter
            .matrix
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "matrix".into());
        PathBuf::from(format!("{stem}-report.json"))
    });
    let csv = json.with_extension("csv");
    (json, csv)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    configure_threads(args.filter.threads);
    let a = load_matrix(&args.filter.matrix)?;
    let opts = SolverOptions {
        mu: args.mu,
        dimension: args.dimension,
        samples: args.samples,
        tol: args.tol,
        max_iterations: args.max_iterations,
        margin: args.margin,
        ..base_options(&args.filter)
    };
    let (lo, hi) = (args.filter.interval.0, args.filter.interval.1);
    let report = Solver::new(&a, lo, hi, opts)?.run()?;

    let verification = if args.verify {
        Some(verify(&a, &report)?)
    } else {
        None
    };

    let mut value = report.to_json_value(args.emit_vectors);
    let obj = value.as_object_mut().expect("report is an object");
    obj.insert(
        "matrix".into(),
        json!(args.filter.matrix.display().to_string()),
    );
    if let Some(v) = &verification {
        obj.insert("verification".into(), v.to_json());
    }
    let (json_path, csv_path) = report_paths(args);
    write_file(
        &json_path,
        &serde_json::to_string_pretty(&value).expect("serializable"),
    )?;
    write_file(&csv_path, &report.history_csv())?;

    print_summary(&report);
    println!(
        "report: {}  history: {}",
        json_path.display(),
        csv_path.display()
    );
    for w in &report.warnings {
        eprintln!("cjfeast: warning: {w}");
    }
    if let Some(v) = &verification {
        println!(
            "verify: oracle count {} reported {} max |sigma - oracle| {:.3e} -> {}",
            v.oracle_count,
            v.reported,
            v.max_sigma_error,
            if v.passed { "PASS" } else { "FAIL" }
        );
        for m in &v.problems {
            eprintln!("cjfeast: verify: {m}");
        }
    }

    let code = if report.converged {
        exit::CONVERGED
    } else if report.stagnated {
        exit::STAGNATION
    } else {
        exit::NOT_CONVERGED
    };
    Ok(match &verification {
        Some(v) if !v.passed && code == exit::CONVERGED => exit::NOT_CONVERGED,
        _ => code,
    })
}

fn print_summary(r: &SolverReport) {
    println!(
        "{} after {} iterations: {} triplets in [{}, {}]  (d = {}, p = {}, H_M = {:.3}, MVs = {})",
        if r.converged {
            "converged"
        } else {
            "NOT converged"
        },
        r.iterations,
        r.triplets.len(),
        r.interval.0,
        r.interval.1,
        r.filter.degree,
        r.p,
        r.trace.value,
        r.mvs.total
    );
    println!("{:>4}  {:>24}  {:>12}", "i", "sigma", "residual");
    for (i, t) in r.triplets.iter().enumerate() {
        println!(
            "{:>4}  {:>24.16e}  {:>12.3e}",
            i + 1,
            t.sigma,
            t.residual_norm
        );
    }
}

/// Dense-oracle check of a finished report.
#[derive(Debug, Clone)]
pub struct Verification {
    pub oracle_count: usize,
    pub reported: usize,
    pub max_sigma_error: f64,
    pub passed: bool,
    pub problems: Vec<String>,
}

impl Verification {
    fn to_json(&self) -> Value {
        json!({
            "oracle_count": self.oracle_count,
            "reported": self.reported,
            "max_sigma_error": self.max_sigma_error,
            "passed": self.passed,
            "problems": self.problems,
        })
    }
}

/// Compares against a dense SVD: the in-interval count must match and each
/// reported value must lie within its residual norm of an oracle value.
pub fn verify(a: &SparseMatrix, report: &SolverReport) -> Result<Verification, CliError> {
    let small = a.rows().min(a.cols());
    if small > ORACLE_MAX_COLS {
        return Err(CliError::Usage(format!(
            "--verify needs min(rows, cols) <= {ORACLE_MAX_COLS}, matrix has {small}"
        )));
    }
    let svd = if a.rows() >= a.cols() {
        sparse_full_svd(a)?
    } else {
        sparse_full_svd(&a.transpose())?
    };
    let norm = svd.s.first().copied().unwrap_or(0.0);
    let (lo, hi) = report.interval;
    let oracle_count = count_in_interval(&svd.s, lo, hi);
    let mut problems = Vec::new();
    if oracle_count != report.triplets.len() {
        problems.push(format!(
            "oracle has {oracle_count} singular values in [{lo}, {hi}], report has {}",
            report.triplets.len()
        ));
    }
    let mut max_sigma_error = 0.0f64;
    for t in &report.triplets {
        let err = svd
            .s
            .iter()
            .map(|s| (s - t.sigma).abs())
            .fold(f64::INFINITY, f64::min);
        max_sigma_error = max_sigma_error.max(err);
        let allowed = t.residual_norm + 1e-12 * norm;
        if err > allowed {
            problems.push(format!(
                "sigma {} is {err:.3e} from the nearest oracle value, more than its residual bound {allowed:.3e}",
                t.sigma
            ));
        }
    }
    Ok(Verification {
        oracle_count,
        reported: report.triplets.len(),
        max_sigma_error,
        passed: problems.is_empty(),
        problems,
    })
}

pub fn cmd_count(args: &CountArgs) -> Result<i32, CliError> {
    configure_threads(args.filter.threads);
    let a = load_matrix(&args.filter.matrix)?;
    let opts = SolverOptions {
        samples: args.samples,
        dimension: Some(1),
        ..base_options(&args.filter)
    };
    let seed = opts.seed;
    let (lo, hi) = (args.filter.interval.0, args.filter.interval.1);
    let solver = Solver::new(&a, lo, hi, opts)?;
    let t = solver.trace();
    let p: serde_json::Map<String, Value> = [1.1, 1.2, 1.5]
        .iter()
        .map(|&mu| (format!("{mu}"), json!(dimension_for(t.value, mu))))
        .collect();
    let value = json!({
        "H_M": t.value,
        "d": t.degree,
        "M": t.samples,
        "seed": seed,
        "p": p,
        "sample_std": t.sample_std(),
        "interval": [lo, hi],
        "bounds": solver.bounds(),
        "mvs": solver.mvs_so_far(),
        "warnings": solver.warnings(),
    });
    let text = serde_json::to_string_pretty(&value).expect("serializable");
    println!("{text}");
    if let Some(path) = &args.output {
        write_file(path, &text)?;
    }
    Ok(exit::CONVERGED)
}

pub fn cmd_filter_dump(args: &FilterDumpArgs) -> Result<i32, CliError> {
    configure_threads(args.filter.threads);
    let a = load_matrix(&args.filter.matrix)?;
    let opts = base_options(&args.filter);
    let (lo, hi) = (args.filter.interval.0, args.filter.interval.1);
    let setup = setup_filter(&a, lo, hi, &opts)?;
    let f = &setup.filter;
    let samples: Vec<Value> = match args.points {
        0 => Vec::new(),
        1 => vec![json!({"x": 0.0, "psi": f.evaluate(0.0), "target": f.step.target(0.0)})],
        n => (0..n)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                json!({"x": x, "psi": f.evaluate(x), "target": f.step.target(x)})
            })
            .collect(),
    };
    let value = json!({
        "interval": [lo, hi],
        "filter_interval": [setup.filter_interval.0, setup.filter_interval.1],
        "degree": f.degree,
        "alpha": f.step.alpha,
        "beta": f.step.beta,
        "bounds": setup.bounds,
        "filter": f,
        "samples": samples,
        "warnings": setup.warnings,
    });
    let text = serde_json::to_string_pretty(&value).expect("serializable");
    println!("{text}");
    if let Some(path) = &args.output {
        write_file(path, &text)?;
    }
    Ok(exit::CONVERGED)
}

pub fn cmd_fetch(args: &FetchArgs) -> Result<i32, CliError> {
    let id = fetch::resolve(&args.name)?;
    let cache = args
        .cache_dir
        .clone()
        .unwrap_or_else(fetch::default_cache_dir);
    let template = args
        .url_template
        .clone()
        .unwrap_or_else(fetch::default_url_template);
    let out = fetch::fetch(&id, &cache, &template)?;
    if out.from_cache {
        eprintln!("cjfeast: {} served from cache", id.name);
    }
    println!("{}", out.path.display());
    Ok(exit::CONVERGED)
}
