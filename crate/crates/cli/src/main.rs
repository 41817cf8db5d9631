mod args;
mod commands;
mod instance;

use std::fmt;
use std::process::ExitCode;

use block_ising::Error;
use clap::Parser;

use crate::args::{Cli, Command};

/// Exit 2 for bad input, 3 when a computation hit its ceiling, 1 otherwise.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotConverged { .. } | Error::NoConvergence { .. } => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectral(a) => commands::spectral(a),
        Command::TvCurve(a) => commands::tv(a),
        Command::Mixing(a) => commands::mixing(a),
        Command::Cutoff(a) => commands::cutoff(a),
        Command::Critical(a) => commands::critical(a),
        Command::Metastable(a) => commands::metastable(a),
        Command::Nonclt(a) => commands::nonclt(a),
        Command::Landscape(a) => commands::landscape(a),
        Command::Couple(a) => commands::couple(a),
        Command::ExitTime(a) => commands::exit_time(a),
    };
    match result {
        Ok(outcome) => {
            println!("{}", outcome.line);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
