use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use msm_core::panel::transition_counts;
use msm_core::sim::aalen_johansen;

use super::file_sha256;
use crate::config::ArtifactMeta;
use crate::io::{csv_writer, read_panel};
use crate::Context;

#[derive(Debug, Args)]
pub struct AjArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Cumulative probabilities as `t,from,to,prob,at_risk`.
    #[arg(long)]
    pub out: PathBuf,
    /// Observed transition counts as `from,to,count`.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Count each subject at most once per transition type.
    #[arg(long)]
    pub distinct_loans: bool,
}

pub fn aj(ctx: &Context, args: &AjArgs) -> Result<()> {
    let panel = read_panel(&args.panel, &ctx.config.panel)?;
    let est = aalen_johansen(&panel)?;
    let meta = ArtifactMeta::new("aj", ctx.seed, &(file_sha256(&args.panel)?, args.distinct_loans))?;
    let k = panel.space().n_states();
    let mut w = csv_writer(&args.out, &meta)?;
    w.write_record(["t", "from", "to", "prob", "at_risk"])?;
    for (t, m) in est.cumulative.iter().enumerate() {
        for from in 0..k {
            for to in 0..k {
                w.write_record([
                    t.to_string(),
                    from.to_string(),
                    to.to_string(),
                    m[[from, to]].to_string(),
                    est.at_risk[t][from].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    if let Some(path) = &args.counts {
        let counts = transition_counts(&panel, args.distinct_loans);
        let mut w = csv_writer(path, &meta)?;
        w.write_record(["from", "to", "count"])?;
        for from in 0..k {
            for to in 0..k {
                w.write_record([from.to_string(), to.to_string(), counts.get(from, to).to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
