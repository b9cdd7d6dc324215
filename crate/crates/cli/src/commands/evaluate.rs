use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::Args;
use msm_core::metrics::{calibrate_cutpoints, metric_report, CutpointRule, MetricReport};
use msm_core::panel::Panel;
use msm_core::transitions::TransformMethod;
use serde::Serialize;

use super::{file_sha256, load_bundle, parse_span};
use crate::config::ArtifactMeta;
use crate::io::{csv_writer, read_panel, write_json};
use crate::Context;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model bundle; repeat to compare several.
    #[arg(long = "models", required = true)]
    pub models: Vec<PathBuf>,
    /// Panel the predictions are scored on.
    #[arg(long)]
    pub panel: PathBuf,
    /// Panel used to calibrate cut-points; without it the plain argmax rule is used.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Spans `t1-t2`, comma separated; overrides the config.
    #[arg(long, value_delimiter = ',')]
    pub spans: Vec<String>,
    /// Equal-width ECE bins.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value = "exact")]
    pub method: TransformMethod,
    /// Report keyed by span, horizon and model (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Same rows as CSV with columns span,horizon,model,MultiAUC,AUC1vsA,Brier,ECE,ACC.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub span: String,
    pub t1: u32,
    pub t2: u32,
    pub horizon: u32,
    pub model: String,
    #[serde(flatten)]
    pub metrics: MetricReport,
    pub cutpoints: CutpointRule,
}

#[derive(Debug, Serialize)]
struct EvaluateReport {
    rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct EvaluateSettings {
    models_sha256: Vec<String>,
    spans: Vec<(u32, u32)>,
    bins: usize,
    method: TransformMethod,
    calibrated: bool,
}

fn model_name(path: &std::path::Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

/// Cut-points from the calibration panel for the start states seen there;
/// start states it lacks fall back to the uniform rule with a note.
fn cutpoints_for(
    bundle: &msm_core::fit::ModelBundle,
    calib: Option<&Panel>,
    start_states: &[usize],
    span: (u32, u32),
    method: TransformMethod,
    notes: &mut Vec<String>,
) -> Result<CutpointRule> {
    let k = bundle.space.n_states();
    let mut rule = match calib {
        Some(panel) => {
            let eval = bundle.span_evaluation(panel, span.0, span.1, method)?;
            let mut present: Vec<usize> = eval.start().to_vec();
            present.sort_unstable();
            present.dedup();
            calibrate_cutpoints(&eval, &present)?
        }
        None => {
            notes.push("no calibration panel: argmax classification".into());
            CutpointRule::default()
        }
    };
    for &s in start_states {
        if let std::collections::btree_map::Entry::Vacant(slot) = rule.cutpoints.entry(s) {
            if calib.is_some() {
                notes.push(format!("start state {s} absent from calibration panel: argmax classification"));
            }
            slot.insert(vec![1.0 / k as f64; k]);
        }
    }
    Ok(rule)
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let spans: Vec<(u32, u32)> = if args.spans.is_empty() {
        ctx.config.evaluate.spans.clone()
    } else {
        args.spans.iter().map(|s| parse_span(s)).collect::<Result<_>>()?
    };
    if spans.is_empty() {
        anyhow::bail!("no spans given; use --spans or `[evaluate] spans` in the config");
    }
    let bins = args.bins.unwrap_or(ctx.config.evaluate.bins);
    let panel = read_panel(&args.panel, &ctx.config.panel)?;
    let calib = args.calib.as_ref().map(|p| read_panel(p, &ctx.config.panel)).transpose()?;
    let settings = EvaluateSettings {
        models_sha256: args.models.iter().map(|p| file_sha256(p)).collect::<Result<_>>()?,
        spans: spans.clone(),
        bins,
        method: args.method,
        calibrated: calib.is_some(),
    };
    let meta = ArtifactMeta::new("evaluate", ctx.seed, &settings)?;

    let mut rows = Vec::new();
    for path in &args.models {
        let bundle = load_bundle(path)?;
        let name = model_name(path);
        for &(t1, t2) in &spans {
            let eval = bundle
                .span_evaluation(&panel, t1, t2, args.method)
                .with_context(|| format!("model {name}, span {t1}-{t2}"))?;
            let mut present: Vec<usize> = eval.start().to_vec();
            present.sort_unstable();
            present.dedup();
            let mut notes = Vec::new();
            let rule = cutpoints_for(&bundle, calib.as_ref(), &present, (t1, t2), args.method, &mut notes)
                .with_context(|| format!("calibrating cut-points for span {t1}-{t2}"))?;
            let mut metrics = metric_report(&eval, Some(&rule), bins)?;
            metrics.notes.extend(notes);
            rows.push(ReportRow {
                span: format!("{t1}-{t2}"),
                t1,
                t2,
                horizon: t2 - t1,
                model: name.clone(),
                metrics,
                cutpoints: rule,
            });
        }
    }
    rows.sort_by(|a, b| (a.t1, a.t2, &a.model).cmp(&(b.t1, b.t2, &b.model)));
    write_json(&args.out, &meta, &EvaluateReport { rows: rows.clone() })?;
    if let Some(path) = &args.csv {
        let mut w = csv_writer(path, &meta)?;
        w.write_record(["span", "horizon", "model", "n", "MultiAUC", "AUC1vsA", "Brier", "ECE", "ACC"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &rows {
            w.write_record([
                r.span.clone(),
                r.horizon.to_string(),
                r.model.clone(),
                r.metrics.n.to_string(),
                opt(r.metrics.multi_auc),
                opt(r.metrics.auc_one_vs_all),
                r.metrics.brier.to_string(),
                r.metrics.ece.to_string(),
                opt(r.metrics.accuracy),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}
