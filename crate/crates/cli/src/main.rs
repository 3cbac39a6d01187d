//! `boundnoise`: batch front end for calibration, comparison, planning and audits.
//!
//! Exit codes: 0 success or certified, 1 usage error, 2 infeasible / rejected /
//! refuted, 3 numeric failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use boundnoise::Error;
use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Validation(_) | Error::UnknownStrategy { .. } => 1,
            Error::Infeasible(_) | Error::BudgetExhausted(_) => 2,
            Error::Numeric(_) | Error::NonConvergence(_) => 3,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let ctx = commands::Context::new(&cli.global)?;
    match &cli.command {
        Command::Calibrate(a) => commands::calibrate(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Adaptive(a) => commands::adaptive(&ctx, a),
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Falsify(a) => commands::falsify(&ctx, a),
        Command::Theory(a) => commands::theory(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
