//! `cjfeast` command-line tool: argument parsing, subcommands and matrix
//! download.

pub mod args;
pub mod commands;
pub mod fetch;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;

/// Process exit codes.
pub mod exit {
    pub const CONVERGED: i32 = 0;
    pub const NOT_CONVERGED: i32 = 2;
    pub const STAGNATION: i32 = 3;
    pub const USAGE: i32 = 64;
    pub const DATA: i32 = 65;
    /// Network or mirror unreachable during `fetch`.
    pub const UNAVAILABLE: i32 = 69;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Unavailable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Data(_) => exit::DATA,
            CliError::Unavailable(_) => exit::UNAVAILABLE,
        }
    }
}

impl From<cjfeast::Error> for CliError {
    fn from(e: cjfeast::Error) -> Self {
        use cjfeast::Error as E;
        match e {
            E::InvalidArgument(_) | E::InvalidInterval { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::CONVERGED
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cjfeast: error: {e}");
            e.exit_code()
        }
    }
}
