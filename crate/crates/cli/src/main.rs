mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;
use threshdist::Error;

use commands::Cli;

/// Failure of one invocation, carrying the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
    SelfcheckFailed(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_NOT_COVERED: u8 = 4;

impl CliError {
    fn category_and_code(&self) -> (&'static str, u8) {
        match self {
            CliError::Usage(_) => ("usage", EXIT_USAGE),
            CliError::SelfcheckFailed(_) => ("selfcheck_failed", EXIT_NUMERIC),
            CliError::Lib(e) => match e {
                Error::InvalidArgument(_) => ("invalid_argument", EXIT_USAGE),
                Error::MissingParameter(_) => ("missing_parameter", EXIT_USAGE),
                Error::UnsupportedComparison(_) => ("unsupported_comparison", EXIT_USAGE),
                Error::NotCovered(_) => ("not_covered", EXIT_NOT_COVERED),
                Error::QuadratureFailure { .. } => ("quadrature_failure", EXIT_NUMERIC),
                Error::SingularDesign(_) => ("singular_design", EXIT_NUMERIC),
                Error::NonConvergence { .. } => ("non_convergence", EXIT_NUMERIC),
                Error::UndefinedWeights(_) => ("undefined_weights", EXIT_NUMERIC),
                Error::TooManyFailures { .. } => ("too_many_failures", EXIT_NUMERIC),
                Error::Io(_) => ("io", EXIT_IO),
                Error::Json(_) => ("json", EXIT_IO),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::SelfcheckFailed(n) => format!("{n} selfcheck invariant(s) failed"),
        }
    }
}

// A closed downstream pipe (`| head`) ends output early but is not a failure.
fn is_broken_pipe(err: &CliError) -> bool {
    match err {
        CliError::Lib(Error::Io(e)) => e.kind() == std::io::ErrorKind::BrokenPipe,
        CliError::Lib(Error::Json(e)) => e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe),
        _ => false,
    }
}

fn report(err: &CliError) -> ExitCode {
    if is_broken_pipe(err) {
        return ExitCode::SUCCESS;
    }
    let (category, code) = err.category_and_code();
    let record = json!({ "error": category, "message": err.message(), "exit_code": code });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report(&CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
