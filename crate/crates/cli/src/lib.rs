//! The `spectral-support` command-line tool.
//!
//! Every subcommand writes RFC-4180 CSV with a `#`-prefixed metadata
//! preamble. Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric
//! failure.

pub mod args;
mod commands;
mod resolve;

use std::fmt;
use std::fs;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use spectral_support::report::Table;
use spectral_support::{Error, ErrorClass};

use crate::args::{Cli, Command, OutputArgs};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numeric => EXIT_NUMERIC,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Score(a) => commands::score(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Synth(a) => commands::synth(a),
        Command::VerifyBounds(a) => commands::verify_bounds(a),
    }
}

/// Adds the timestamp line unless suppressed.
fn stamp(table: &mut Table, no_timestamp: bool) {
    if !no_timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        table.meta("generated", secs);
    }
}

fn emit(mut table: Table, out: &OutputArgs) -> CliResult<()> {
    stamp(&mut table, out.no_timestamp);
    let csv = table.to_csv();
    match &out.out {
        Some(path) => fs::write(path, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::from(Error::InvalidParameter("bad".into())).exit_code(),
            2
        );
        assert_eq!(CliError::from(Error::Empty("rows")).exit_code(), 3);
        assert_eq!(CliError::from(Error::EigenSolver).exit_code(), 4);
        assert_eq!(
            CliError::from(Error::Factorization("x".into())).exit_code(),
            4
        );
    }
}
