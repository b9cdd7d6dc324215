use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use msm_core::fit::{bootstrap_intervals, fit_all, grid_search, BootstrapSummary, BundleOptions, FitConfig, FitMode};
use msm_core::panel::{extract_transition_dataset_with, CompetingExits};
use msm_core::sim::simulation_fit_config;
use serde::Serialize;

use super::{parse_edge, resolve_design};
use crate::config::ArtifactMeta;
use crate::io::{read_panel, write_json};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Semi,
    Structured,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Bundle of all edge models (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-edge losses, epochs and orthogonality diagnostics (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write one model file per edge into this directory.
    #[arg(long)]
    pub per_edge_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Keep rows that leave for a third state as non-events.
    #[arg(long)]
    pub keep_competing_as_zero: bool,
    /// Subject-level bootstrap resamples per edge.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Where bootstrap intervals go (JSON); required with --bootstrap.
    #[arg(long)]
    pub bootstrap_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct FitSettings<'a> {
    design: &'a msm_core::design::DesignSpec,
    fit: &'a FitConfig,
    bundle: &'a BundleOptions,
}

#[derive(Debug, Serialize)]
struct EdgeReport {
    edge: String,
    mode: FitMode,
    n_train: usize,
    n_validation: usize,
    epochs_run: usize,
    best_epoch: usize,
    train_loss: f64,
    validation_loss: Option<f64>,
    converged: bool,
    orthogonality: Option<f64>,
    unstructured_ratio: Option<f64>,
    coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    edges: Vec<EdgeReport>,
}

/// Fit configuration from the config file, defaulting to the simulation
/// protocol for simulated panels and the library defaults otherwise.
fn resolve_fit(ctx: &Context, simulated: bool, mode: Option<ModeArg>) -> FitConfig {
    let mut cfg = match (&ctx.config.fit, simulated) {
        (Some(c), _) => c.clone(),
        (None, true) => simulation_fit_config(ctx.seed),
        (None, false) => FitConfig::default(),
    };
    cfg.seed = ctx.seed;
    match mode {
        Some(ModeArg::Semi) => cfg.mode = FitMode::SemiStructured,
        Some(ModeArg::Structured) => cfg.mode = FitMode::StructuredOnly,
        None => {}
    }
    cfg
}

fn is_simulated(panel: &msm_core::panel::Panel) -> bool {
    let names: Vec<&str> = panel.schema().columns().iter().map(|c| c.name.as_str()).collect();
    names == msm_core::sim::COVARIATES
}

pub fn fit(ctx: &Context, args: &FitArgs) -> Result<()> {
    if args.bootstrap.is_some() != args.bootstrap_out.is_some() {
        bail!("--bootstrap and --bootstrap-out go together");
    }
    let panel = read_panel(&args.panel, &ctx.config.panel)?;
    let design = resolve_design(ctx, &panel);
    let cfg = resolve_fit(ctx, is_simulated(&panel), args.mode);
    let mut options = ctx.config.bundle.clone();
    if args.keep_competing_as_zero {
        options.competing = CompetingExits::KeepAsZero;
    }
    for edge_cfg in options.edge_configs.values_mut() {
        edge_cfg.seed = cfg.seed;
    }
    design.validate()?;
    cfg.validate()?;
    let meta = ArtifactMeta::new("fit", ctx.seed, &FitSettings { design: &design, fit: &cfg, bundle: &options })?;

    let bundle = fit_all(&panel, &design, &cfg, &options)?;
    write_json(&args.out, &meta, &bundle)?;
    if let Some(dir) = &args.per_edge_dir {
        for m in &bundle.models {
            write_json(&dir.join(format!("edge_{}_{}.json", m.edge.0, m.edge.1)), &meta, m)?;
        }
    }
    if let Some(path) = &args.report {
        let edges = bundle
            .models
            .iter()
            .map(|m| EdgeReport {
                edge: m.edge.to_string(),
                mode: m.mode,
                n_train: m.metadata.n_train,
                n_validation: m.metadata.n_validation,
                epochs_run: m.metadata.epochs_run,
                best_epoch: m.metadata.best_epoch,
                train_loss: m.metadata.train_loss,
                validation_loss: m.metadata.validation_loss,
                converged: m.metadata.converged,
                orthogonality: m.metadata.orthogonality,
                unstructured_ratio: m.metadata.unstructured_ratio,
                coefficients: m.coefficients(),
            })
            .collect();
        write_json(path, &meta, &FitReport { edges })?;
    }
    if let (Some(b), Some(path)) = (args.bootstrap, &args.bootstrap_out) {
        let mut out: BTreeMap<String, BootstrapSummary> = BTreeMap::new();
        for &edge in panel.space().edges() {
            let ds = extract_transition_dataset_with(&panel, edge, options.competing)?;
            let ecfg = options.edge_configs.get(&edge.to_string()).unwrap_or(&cfg);
            let summary =
                bootstrap_intervals(&ds, &design, ecfg, b).with_context(|| format!("bootstrap of edge {edge}"))?;
            out.insert(edge.to_string(), summary);
        }
        write_json(path, &meta, &out)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Edge to tune, e.g. `0-1`.
    #[arg(long)]
    pub edge: String,
    /// Independent initialisations per configuration.
    #[arg(long, default_value_t = 2)]
    pub replicates: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn grid(ctx: &Context, args: &GridArgs) -> Result<()> {
    if ctx.config.grid.is_empty() {
        bail!("grid-search needs `[[grid]]` entries in the config file");
    }
    let panel = read_panel(&args.panel, &ctx.config.panel)?;
    let edge = parse_edge(&args.edge)?;
    let design = resolve_design(ctx, &panel);
    let grid: Vec<FitConfig> = ctx.config.grid.iter().map(|c| FitConfig { seed: ctx.seed, ..c.clone() }).collect();
    let ds = extract_transition_dataset_with(&panel, edge, ctx.config.bundle.competing)?;
    let result = grid_search(&ds, &design, &grid, args.replicates)?;
    let meta = ArtifactMeta::new("grid-search", ctx.seed, &(&design, &grid, args.replicates, edge))?;
    write_json(&args.out, &meta, &result)?;
    Ok(())
}
