use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use msm_core::sim::{simulate_panel, synthetic_mortgage_panel, DgpSpec, MortgageSpec};

use crate::config::ArtifactMeta;
use crate::io::{write_json, write_panel};
use crate::Context;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of subjects (loans with --mortgage).
    #[arg(long)]
    pub n: Option<usize>,
    /// Months of follow-up.
    #[arg(long = "t")]
    pub horizon: Option<u32>,
    /// Innovation SD of the baseline random walks.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed of the baseline curves, kept fixed across replicates.
    #[arg(long)]
    pub curve_seed: Option<u64>,
    /// Drop the `x1·x2` interaction from every predictor.
    #[arg(long)]
    pub no_interaction: bool,
    /// Write the synthetic mortgage panel instead of the additive design.
    #[arg(long)]
    pub mortgage: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Truth file (spec, effects, baselines and covariates) for scoring.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let section = &ctx.config.simulate;
    if args.mortgage {
        let spec = MortgageSpec {
            n_loans: args.n.unwrap_or(MortgageSpec::default().n_loans),
            horizon: args.horizon.unwrap_or(MortgageSpec::default().horizon),
            seed: ctx.seed,
        };
        let panel = synthetic_mortgage_panel(&spec)?;
        let meta = ArtifactMeta::new("simulate", ctx.seed, &spec)?;
        write_panel(&panel, &args.out, &meta)?;
        log::info!("wrote {} loans to {}", panel.len(), args.out.display());
        return Ok(());
    }
    let mut spec = DgpSpec::with_curves(
        args.n.unwrap_or(section.n),
        args.horizon.unwrap_or(section.horizon),
        args.sigma.unwrap_or(section.sigma),
        args.curve_seed.unwrap_or(section.curve_seed),
        ctx.seed,
    )?;
    spec.include_interaction = section.include_interaction && !args.no_interaction;
    let sim = simulate_panel(&spec)?;
    let meta = ArtifactMeta::new("simulate", ctx.seed, &spec)?;
    write_panel(&sim.panel, &args.out, &meta)?;
    if let Some(path) = &args.truth {
        write_json(path, &meta, &sim.truth)?;
    }
    log::info!("wrote {} subjects ({} rows) to {}", sim.panel.len(), sim.panel.n_rows(), args.out.display());
    Ok(())
}
