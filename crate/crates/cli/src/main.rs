//! `percmon`: dataset generation, parameter fitting, inference,
//! diagnosability analysis and reporting for perception diagnostic graphs.
//!
//! Every command prints one JSON object on stdout. Failures print an error
//! envelope `{"status": "error", "error": {"code", "message"}}` instead and
//! exit non-zero.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::RunConfig;
use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "percmon", version, about = "Fault identification for perception pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON file with any of the flag values; its values take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    run: RunConfig,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate the obstacle-detection world and write train/test/validation splits.
    Generate,
    /// Estimate Noisy-OR and prior parameters from the training split.
    Fit,
    /// Identify faults for every sample of a split and score the results.
    Infer,
    /// Compute kappa-diagnosability and, given a dataset, PAC bounds.
    Diagnosability,
    /// Merge inference runs into one comparison table.
    Report,
}

fn run(cli: Cli) -> Result<Value> {
    let config = match &cli.config {
        Some(path) => cli.run.overridden_by(RunConfig::load(path)?),
        None => cli.run,
    };
    match cli.command {
        Command::Generate => commands::generate(&config),
        Command::Fit => commands::fit(&config),
        Command::Infer => commands::infer(&config),
        Command::Diagnosability => commands::diagnosability(&config),
        Command::Report => commands::report(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            println!("{}", err.envelope());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(mut summary) => {
            summary["status"] = json!("ok");
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", err.envelope());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
