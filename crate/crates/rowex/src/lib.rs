//! File formats and the command-line front end for `rowex-core`.
//!
//! Arrays travel as CSV ([`array_csv`]) and everything else as JSON
//! ([`formats`]). [`cli::run`] executes one parsed command; [`main_with`]
//! wraps it with error reporting and exit codes.

pub mod array_csv;
pub mod cli;
pub mod error;
pub mod formats;
pub mod io;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

pub use error::{CliError, CliResult};

/// Parses `args`, runs the command and reports failure on standard error.
///
/// Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 the data
/// have zero probability under the model.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Inference(_) => eprintln!("{}", e.to_json()),
                _ => eprintln!("rowex: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
