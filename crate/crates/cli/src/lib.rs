//! Library side of the `msm` command-line tool.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::RunConfig;

pub use commands::{AjArgs, CompareArgs, EvaluateArgs, FitArgs, GridArgs, PredictArgs, SimulateArgs, TransformArgs};

#[derive(Debug, Parser)]
#[command(name = "msm", version, about = "Semi-structured multi-state transition models")]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a panel from the additive data-generating process.
    Simulate(SimulateArgs),
    /// Fit one model per permissible transition.
    Fit(FitArgs),
    /// Predict state distributions at t2 given the state at t1.
    Predict(PredictArgs),
    /// Turn binary edge probabilities into competing transition probabilities.
    Transform(TransformArgs),
    /// Score span predictions of one or more model bundles.
    Evaluate(EvaluateArgs),
    /// Errors of the exact and continuous transforms against simulation truth.
    CompareTransforms(CompareArgs),
    /// Empirical product-limit transition probabilities.
    Aj(AjArgs),
    /// Pick a configuration for one edge by mean validation loss.
    GridSearch(GridArgs),
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let seed = cli.seed.or(config.seed).unwrap_or(0);
        Ok(Self { config, seed })
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::from_cli(&cli)?;
    if let Some(n) = cli.threads.or(ctx.config.threads) {
        // the global pool can only be set once per process
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::Transform(a) => commands::transform(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::CompareTransforms(a) => commands::compare(&ctx, a),
        Command::Aj(a) => commands::aj(&ctx, a),
        Command::GridSearch(a) => commands::grid(&ctx, a),
    }
}

/// 3 when the failure is numerical, 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err.chain().filter_map(|e| e.downcast_ref::<msm_core::Error>()).any(msm_core::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}
