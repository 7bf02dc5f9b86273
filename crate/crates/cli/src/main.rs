mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::report::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    WickCheck,
    Split,
    Vacpol,
    Adiabatic,
    IrProbe,
    GelfandCheck,
    #[value(name = "decompose-1d")]
    Decompose1d,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::WickCheck => "wick-check",
            Command::Split => "split",
            Command::Vacpol => "vacpol",
            Command::Adiabatic => "adiabatic",
            Command::IrProbe => "ir-probe",
            Command::GelfandCheck => "gelfand-check",
            Command::Decompose1d => "decompose-1d",
        }
    }
}

/// Runs one batch of scenarios and writes `report.json` plus CSV tables.
///
/// Exit codes: 0 on success, 1 on input errors, 2 when an adiabatic
/// scenario expected convergence and the verdict was "diverged".
#[derive(Debug, Parser)]
#[command(name = "causal-kernels", version)]
struct Args {
    command: Command,
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and tables; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Progress on stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let bytes = std::fs::read(&args.config).map_err(|source| CliError::Io { path: args.config.clone(), source })?;
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let ctx = commands::Context { base, seed_override: args.seed, verbose: args.verbose };
    let run = commands::dispatch(args.command, &bytes, &ctx)?;
    report::write(&args.out, args.command.name(), &bytes, &run)?;
    if args.verbose {
        eprintln!("wrote {} scenario(s) to {}", run.scenarios.len(), args.out.display());
    }
    Ok(if run.expectation_failed { 2 } else { 0 })
}
