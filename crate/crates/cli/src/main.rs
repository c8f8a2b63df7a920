//! `varimatch`: synthetic shapes, registrations, evaluations and deformation
//! export from the command line.
//!
//! Exit codes: 0 success, 1 numerical failure (partial outputs written),
//! 2 usage or input error.

// Negated comparisons deliberately treat NaN as invalid input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DeformArgs, EvaluateArgs, RegisterArgs, SynthArgs};

#[derive(Parser)]
#[command(
    name = "varimatch",
    version,
    about = "Partial shape registration with oriented varifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic target mesh and a (possibly truncated) source mesh.
    Synth(SynthArgs),
    /// Register a source mesh onto a target mesh.
    Register(RegisterArgs),
    /// Compare landmark sets, optionally transporting the first through a map.
    Evaluate(EvaluateArgs),
    /// Apply a registration map to points or to a regular grid.
    Deform(DeformArgs),
}

/// Error with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<varimatch::Error> for CliError {
    fn from(e: varimatch::Error) -> Self {
        use varimatch::Error as E;
        match e {
            E::Divergence { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VARIMATCH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::input(format!(
            "VARIMATCH_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let run = || -> Result<(), CliError> {
        configure_threads()?;
        match cli.command {
            Command::Synth(a) => commands::synth(a),
            Command::Register(a) => commands::register(a),
            Command::Evaluate(a) => commands::evaluate(a),
            Command::Deform(a) => commands::deform(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
