//! `dmpk` — simulate transmission-eigenvalue diffusion in disordered wires
//! and verify the theory behind it.
//!
//! Exit codes: 0 success, 1 an acceptance-style check failed, 2 usage error,
//! 3 numerical/runtime failure.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dmpk_core::Error as CoreError;

#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Runtime(String),
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) => AppError::Usage(e.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(format!("i/o: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "dmpk",
    version,
    about = "Transmission-eigenvalue diffusion for disordered quantum wires"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a path ensemble and write per-path transmission values as CSV.
    Simulate(commands::simulate::Args),
    /// Estimate Var(g) against the universal value 2/(15β).
    Ucf(commands::ucf::Args),
    /// Compare the conductance laws of the matrix and eigenvalue engines.
    Compare(commands::compare::Args),
    /// Run a verification suite and report failures per check.
    Verify(commands::verify::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Ucf(args) => commands::ucf::run(&args),
        Command::Compare(args) => commands::compare::run(&args),
        Command::Verify(args) => commands::verify::run(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
