//! Subject-level bootstrap intervals and configuration search.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_transition, FitConfig};
use crate::design::{fit_preprocess, DesignSpec};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::panel::TransitionDataset;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientInterval {
    pub name: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub requested: usize,
    pub succeeded: usize,
    pub coefficients: Vec<CoefficientInterval>,
}

/// Linear-interpolation quantile of sorted values.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Refits on `b` subject-level resamples (replicate `r` uses seed
/// `cfg.seed + r`) and reports percentile intervals of the re-attributed
/// coefficients. At least 90% of replicates must succeed.
pub fn bootstrap_intervals(
    ds: &TransitionDataset<'_>,
    spec: &DesignSpec,
    cfg: &FitConfig,
    b: usize,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least two resamples".into()));
    }
    let subjects: Vec<usize> = ds.rows().iter().map(|r| r.subject).collect::<BTreeSet<_>>().into_iter().collect();
    if subjects.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut rng = stream(cfg.seed, Stream::Bootstrap);
    let draws: Vec<Vec<usize>> =
        (0..b).map(|_| (0..subjects.len()).map(|_| subjects[rng.random_range(0..subjects.len())]).collect()).collect();
    let fits: Vec<Result<BTreeMap<String, f64>>> = draws
        .par_iter()
        .enumerate()
        .map(|(r, draw)| {
            let resampled = ds.resample(draw);
            let rcfg = FitConfig { seed: cfg.seed.wrapping_add(r as u64), ..cfg.clone() };
            fit_transition(&resampled, spec, &rcfg).map(|m| m.coefficients())
        })
        .collect();
    let mut ok = Vec::new();
    for (r, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(beta) => ok.push(beta),
            Err(e) => log::warn!("bootstrap replicate {r} failed: {e}"),
        }
    }
    if (ok.len() as f64) < 0.9 * b as f64 {
        return Err(Error::BootstrapFailed { succeeded: ok.len(), requested: b });
    }
    // full-data column order; a resample that lost a category level simply lacks that coefficient
    let names = fit_preprocess(spec, &Frame::from_dataset(ds), &ds.labels(), None)?.column_names;
    let coefficients = names
        .iter()
        .filter_map(|name| {
            let mut vals: Vec<f64> = ok.iter().filter_map(|c| c.get(name).copied()).collect();
            if vals.is_empty() {
                return None;
            }
            vals.sort_by(|a, b| a.total_cmp(b));
            Some(CoefficientInterval {
                name: name.clone(),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                lower: quantile(&vals, 0.025),
                upper: quantile(&vals, 0.975),
            })
        })
        .collect();
    Ok(BootstrapSummary { requested: b, succeeded: ok.len(), coefficients })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub best: FitConfig,
    /// Mean best monitored loss per grid point; infinite when every run failed.
    pub scores: Vec<f64>,
}

/// Picks the configuration with the lowest mean validation loss over
/// `replicates` runs (seeds `seed`, `seed + 1`, ...).
pub fn grid_search(
    ds: &TransitionDataset<'_>,
    spec: &DesignSpec,
    grid: &[FitConfig],
    replicates: usize,
) -> Result<GridSearchResult> {
    if grid.is_empty() || replicates == 0 {
        return Err(Error::InvalidConfig("grid search needs configurations and replicates".into()));
    }
    let mut last_err = None;
    let mut scores = Vec::with_capacity(grid.len());
    for cfg in grid {
        let runs: Vec<Result<f64>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let rcfg = FitConfig { seed: cfg.seed.wrapping_add(r as u64), ..cfg.clone() };
                let m = fit_transition(ds, spec, &rcfg)?;
                Ok(m.metadata.validation_loss.unwrap_or(m.metadata.train_loss))
            })
            .collect();
        let mut total = 0.0;
        let mut failed = false;
        for run in runs {
            match run {
                Ok(v) => total += v,
                Err(e) => {
                    log::warn!("grid point failed: {e}");
                    failed = true;
                    last_err = Some(e);
                }
            }
        }
        scores.push(if failed { f64::INFINITY } else { total / replicates as f64 });
    }
    let (best_index, best_score) =
        scores.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    if !best_score.is_finite() {
        return Err(last_err.unwrap_or_else(|| Error::InvalidConfig("no grid point produced a score".into())));
    }
    Ok(GridSearchResult { best_index, best: grid[best_index].clone(), scores })
}
