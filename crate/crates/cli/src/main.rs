//! `resilpce` command-line interface.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, StudyConfig};
use error::{CliError, CliResult, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "resilpce", version, about = "Sparse PCE resilience studies of power grids")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an experiment design.
    Design(commands::DesignArgs),
    /// Fit a sparse PCE to a design and its model outputs.
    Fit(commands::FitArgs),
    /// Moments and output distribution of a fitted PCE.
    Moments(commands::MomentsArgs),
    /// Simulate storm events for rows of failure times.
    Simulate(commands::SimulateArgs),
    /// Replicated stability study.
    Stability(commands::StabilityArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = StudyConfig::load(&cli.overrides)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Design(a) => commands::design(&cfg, a),
        Command::Fit(a) => commands::fit(&cfg, a),
        Command::Moments(a) => commands::moments(&cfg, a),
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Stability(a) => commands::stability(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
