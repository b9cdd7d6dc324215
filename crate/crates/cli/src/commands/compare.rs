use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use msm_core::sim::{
    compare_transforms, sample_subjects, simulation_design, simulation_fit_config, summarise,
    transform_study_replicate, DgpSpec, MethodSummary, QSource, SimTruth, Simulation, TransformComparison,
};
use serde::Serialize;

use super::{file_sha256, load_bundle};
use crate::config::ArtifactMeta;
use crate::io::{csv_writer, read_json, read_panel, write_json};
use crate::Context;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Truth file from `simulate`; repeat together with --panel for several replicates.
    #[arg(long)]
    pub truth: Vec<PathBuf>,
    /// Panel simulated alongside each truth file.
    #[arg(long)]
    pub panel: Vec<PathBuf>,
    /// Bundle fitted on each panel; without it the true edge probabilities are transformed.
    #[arg(long)]
    pub models: Vec<PathBuf>,
    /// Simulate, fit and score this many replicates instead of reading files.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Subjects per simulated replicate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Only transform the true edge probabilities in simulated replicates.
    #[arg(long)]
    pub skip_fit: bool,
    /// Subjects drawn for scoring.
    #[arg(long, default_value_t = 1000)]
    pub subjects: usize,
    /// Target month; defaults to the simulation horizon.
    #[arg(long)]
    pub t2: Option<u32>,
    /// Full report with every replicate (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Summary table as CSV: source,metric,method,target,mean,sd.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    t2: u32,
    subjects: usize,
    true_q: Vec<TransformComparison>,
    fitted_q: Vec<TransformComparison>,
    true_q_summary: MethodSummary,
    fitted_q_summary: Option<MethodSummary>,
}

fn cell(mean: f64, sd: f64) -> String {
    if sd.is_finite() {
        format!("{mean:.4} ({sd:.5})")
    } else {
        format!("{mean:.4}")
    }
}

/// Text table with one row per target state, mean (sd) per column.
pub fn format_table(title: &str, s: &MethodSummary) -> String {
    let mut out = format!("{title}\n");
    let _ = writeln!(
        out,
        "{:<8} {:>20} {:>20} {:>20} {:>20}",
        "target", "MSE continuous", "MSE exact", "MAE continuous", "MAE exact"
    );
    for j in 0..s.exact.mse_mean.len() {
        let _ = writeln!(
            out,
            "{:<8} {:>20} {:>20} {:>20} {:>20}",
            format!("0->{j}"),
            cell(s.continuous.mse_mean[j], s.continuous.mse_sd[j]),
            cell(s.exact.mse_mean[j], s.exact.mse_sd[j]),
            cell(s.continuous.mae_mean[j], s.continuous.mae_sd[j]),
            cell(s.exact.mae_mean[j], s.exact.mae_sd[j]),
        );
    }
    let _ = writeln!(out, "exact better on every target in {} of {} replicates", s.exact_better, s.exact.replicates);
    out
}

pub fn compare(ctx: &Context, args: &CompareArgs) -> Result<()> {
    let mut true_q = Vec::new();
    let mut fitted_q = Vec::new();
    let t2;
    let settings;
    if let Some(reps) = args.replicates {
        let section = &ctx.config.simulate;
        let n = args.n.unwrap_or(section.n);
        t2 = args.t2.unwrap_or(section.horizon);
        let design = ctx.config.design.clone().unwrap_or_else(simulation_design);
        let fit_cfg = ctx.config.fit.clone().unwrap_or_else(|| simulation_fit_config(ctx.seed));
        settings = serde_json::json!({
            "simulate": section, "n": n, "replicates": reps, "t2": t2, "subjects": args.subjects,
            "fit": if args.skip_fit { None } else { Some((&design, &fit_cfg)) },
        });
        for r in 0..reps as u64 {
            let seed = ctx.seed.wrapping_add(r);
            let mut spec = DgpSpec::with_curves(n, section.horizon, section.sigma, section.curve_seed, seed)?;
            spec.include_interaction = section.include_interaction;
            let cfg = msm_core::fit::FitConfig { seed, ..fit_cfg.clone() };
            let fit = (!args.skip_fit).then_some((&design, &cfg));
            let rep = transform_study_replicate(&spec, fit, args.subjects, t2)?;
            log::info!("replicate {} of {reps} done", r + 1);
            true_q.push(rep.true_q);
            fitted_q.extend(rep.fitted_q);
        }
    } else {
        if args.truth.is_empty() {
            bail!("missing truth: pass --truth with --panel, or --replicates to simulate");
        }
        if args.panel.len() != args.truth.len() || !(args.models.is_empty() || args.models.len() == args.truth.len()) {
            bail!("give one --panel (and optionally one --models) per --truth");
        }
        let mut horizon = None;
        let mut hashes = Vec::new();
        for (i, (truth_path, panel_path)) in args.truth.iter().zip(&args.panel).enumerate() {
            let truth: SimTruth = read_json(truth_path)?;
            let panel = read_panel(panel_path, &ctx.config.panel)?;
            if panel.len() != truth.covariates.len() {
                bail!(
                    "{} has {} subjects but its truth file has {}",
                    panel_path.display(),
                    panel.len(),
                    truth.covariates.len()
                );
            }
            let h = args.t2.unwrap_or(truth.spec.horizon);
            horizon.get_or_insert(h);
            let sim = Simulation { panel, truth };
            let subjects = sample_subjects(sim.panel.len(), args.subjects, sim.truth.spec.seed);
            true_q.push(compare_transforms(&sim, QSource::Truth, &subjects, h)?);
            hashes.push(file_sha256(truth_path)?);
            if let Some(models) = args.models.get(i) {
                let bundle = load_bundle(models)?;
                fitted_q.push(compare_transforms(&sim, QSource::Fitted(&bundle), &subjects, h)?);
                hashes.push(file_sha256(models)?);
            }
        }
        t2 = horizon.expect("at least one truth file");
        settings = serde_json::json!({ "inputs_sha256": hashes, "t2": t2, "subjects": args.subjects });
    }

    let true_q_summary = summarise(&true_q)?;
    let fitted_q_summary = if fitted_q.is_empty() { None } else { Some(summarise(&fitted_q)?) };
    print!("{}", format_table("true edge probabilities", &true_q_summary));
    if let Some(s) = &fitted_q_summary {
        print!("{}", format_table("fitted edge probabilities", s));
    }
    let meta = ArtifactMeta::new("compare-transforms", ctx.seed, &settings)?;
    if let Some(path) = &args.csv {
        let mut w = csv_writer(path, &meta)?;
        w.write_record(["source", "metric", "method", "target", "mean", "sd"])?;
        let blocks = [("true_q", Some(&true_q_summary)), ("fitted_q", fitted_q_summary.as_ref())];
        for (source, summary) in blocks {
            let Some(s) = summary else { continue };
            for (method, r) in [("continuous", &s.continuous), ("exact", &s.exact)] {
                for (metric, mean, sd) in [("mse", &r.mse_mean, &r.mse_sd), ("mae", &r.mae_mean, &r.mae_sd)] {
                    for j in 0..mean.len() {
                        w.write_record([
                            source,
                            metric,
                            method,
                            &format!("0->{j}"),
                            &mean[j].to_string(),
                            &sd[j].to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
    }
    write_json(
        &args.out,
        &meta,
        &CompareReport { t2, subjects: args.subjects, true_q, fitted_q, true_q_summary, fitted_q_summary },
    )?;
    Ok(())
}
