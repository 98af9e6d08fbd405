//! Command-line driver for `ingrape`: run-configuration parsing and the
//! `simulate`, `optimize`, `landscape`, `robustness` and `gradcheck` commands.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 runtime or numerical failure.

pub mod commands;
pub mod config;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{CommandError, OutDir};
use config::{parse_config, ConfigError, ErrorCode};

#[derive(Debug, Parser)]
#[command(name = "ingrape", version, about = "Coherent and incoherent control of open quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate the initial state under the configured controls.
    Simulate(Common),
    /// Run one gradient optimization.
    Optimize(Common),
    /// Run many seeded optimizations and cluster their final values.
    Landscape {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Objective statistics under relative control noise.
    Robustness(Common),
    /// Compare the analytic gradient with finite differences.
    Gradcheck(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(cli: Cli) -> Result<(), CommandError> {
    let (common, workers) = match &cli.command {
        Command::Simulate(c) | Command::Optimize(c) | Command::Robustness(c) | Command::Gradcheck(c) => (c, None),
        Command::Landscape { common, workers } => (common, *workers),
    };
    if workers == Some(0) {
        return Err(CommandError::Runtime("--workers must be at least 1".into()));
    }
    let text = fs::read_to_string(&common.config).map_err(|e| {
        CommandError::Config(ConfigError(vec![config::ConfigIssue {
            code: ErrorCode::Syntax,
            path: common.config.display().to_string(),
            message: format!("cannot read configuration: {e}"),
        }]))
    })?;
    let (doc, validated) = parse_config(&text)?;
    let seed = common.seed.unwrap_or(doc.seed);
    let out = OutDir::create(&common.out.clone().unwrap_or_else(|| PathBuf::from(&doc.output.directory)))?;
    match cli.command {
        Command::Simulate(_) => commands::command_simulate(&validated, seed, &out),
        Command::Optimize(_) => commands::command_optimize(&validated, seed, &out),
        Command::Landscape { .. } => commands::command_landscape(&validated, seed, workers, &out),
        Command::Robustness(_) => commands::command_robustness(&validated, seed, &out),
        Command::Gradcheck(_) => commands::command_gradcheck(&validated, seed, &out),
    }
}
