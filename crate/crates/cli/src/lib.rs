//! `giffel` command-line front end: single-image encoding, corpus
//! comparison reports, banding heatmaps and an embedded self-test.
//!
//! [`run`] is the whole program; `main` only forwards `argv` and exits with
//! its status (0 ok, 1 internal failure, 2 usage).

pub mod args;
pub mod commands;
pub mod report;
pub mod selftest;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::Cli;
pub use report::{MetricsReport, Row};

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, unreadable input: exit 2.
    Usage(String),
    /// Anything that went wrong after the inputs were accepted: exit 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<giffel::Error> for CliError {
    fn from(e: giffel::Error) -> Self {
        use giffel::Error as E;
        match e {
            E::InvalidArgument(_) | E::OutOfRange(_) | E::DegenerateSize(_) | E::Parse(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("giffel: {e}");
            e.exit_code()
        }
    }
}
