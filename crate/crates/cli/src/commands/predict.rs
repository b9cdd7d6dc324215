use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::Args;
use msm_core::panel::StateSpace;
use msm_core::transitions::{one_step_matrix, TransformMethod};
use serde::Serialize;

use super::{file_sha256, load_bundle};
use crate::config::ArtifactMeta;
use crate::io::{csv_writer, read_panel, read_table};
use crate::Context;

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model bundle written by `fit`.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub t1: u32,
    #[arg(long)]
    pub t2: u32,
    /// `exact` or `continuous`.
    #[arg(long, default_value = "exact")]
    pub method: TransformMethod,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PredictSettings {
    models_sha256: String,
    t1: u32,
    t2: u32,
    method: TransformMethod,
}

/// Writes `id,p0,...` for every subject observed at `t1`.
pub fn predict(ctx: &Context, args: &PredictArgs) -> Result<()> {
    let bundle = load_bundle(&args.models)?;
    let panel = read_panel(&args.panel, &ctx.config.panel)?;
    let preds = bundle.predict_span(&panel, args.t1, args.t2, args.method)?;
    let skipped = panel.len() - preds.len();
    if skipped > 0 {
        log::warn!("{skipped} subjects not observed at t={} were skipped", args.t1);
    }
    let settings =
        PredictSettings { models_sha256: file_sha256(&args.models)?, t1: args.t1, t2: args.t2, method: args.method };
    let meta = ArtifactMeta::new("predict", ctx.seed, &settings)?;
    let mut w = csv_writer(&args.out, &meta)?;
    let k = bundle.space.n_states();
    let mut header = vec!["id".to_string()];
    header.extend((0..k).map(|j| format!("p{j}")));
    w.write_record(&header)?;
    for p in &preds {
        let mut rec = vec![panel.subjects()[p.subject].id.clone()];
        rec.extend(p.probs.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// CSV with `id,t` and one `q<k><l>` column per edge.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "exact")]
    pub method: TransformMethod,
}

/// Writes `id,t,from,p0,...,flagged`: one row per input row and start state.
pub fn transform(ctx: &Context, args: &TransformArgs) -> Result<()> {
    let space = StateSpace::delinquency();
    let q_cols: Vec<String> = space.edges().iter().map(|e| format!("q{}{}", e.0, e.1)).collect();
    let (headers, rows) = read_table(&args.input)?;
    for c in ["id", "t"].iter().map(|s| s.to_string()).chain(q_cols.iter().cloned()) {
        if !headers.contains(&c) {
            bail!("{}: missing column `{c}`", args.input.display());
        }
    }
    let meta = ArtifactMeta::new("transform", ctx.seed, &(args.method, file_sha256(&args.input)?))?;
    let mut w = csv_writer(&args.out, &meta)?;
    let k = space.n_states();
    let mut header = vec!["id".to_string(), "t".into(), "from".into()];
    header.extend((0..k).map(|j| format!("p{j}")));
    header.push("flagged".into());
    w.write_record(&header)?;
    let mut flagged_rows = 0usize;
    for (line, row) in rows.iter().enumerate() {
        let q: Vec<f64> = q_cols
            .iter()
            .map(|c| {
                row[c].parse::<f64>().with_context(|| format!("data row {}: bad `{c}` value `{}`", line + 1, row[c]))
            })
            .collect::<Result<_>>()?;
        let (m, flagged) = one_step_matrix(&space, &q, args.method)?;
        flagged_rows += usize::from(flagged);
        for from in 0..k {
            let mut rec = vec![row["id"].clone(), row["t"].clone(), from.to_string()];
            rec.extend(m.row(from).iter().map(|v| v.to_string()));
            rec.push(u8::from(flagged).to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    if flagged_rows > 0 {
        log::warn!("{flagged_rows} rows needed renormalising");
    }
    Ok(())
}
