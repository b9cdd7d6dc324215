//! Cumulative-probability errors of the exact and continuous transforms
//! against the simulation truth.

use ndarray::Array2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{recovery_report, simulate_panel, DgpSpec, RecoveryReport, Simulation};
use crate::design::{DesignSpec, SplineTerm};
use crate::error::{Error, Result};
use crate::fit::{fit_all, BundleOptions, FitConfig, ModelBundle, NetworkConfig};
use crate::frame::TIME_COLUMN;
use crate::metrics::{summarise_replicates, transform_error_report, ReplicateSummary, TransformErrors};
use crate::neural::{LrSchedule, OptimizerKind};
use crate::rng::{stream, Stream};
use crate::transitions::{compound_q_rows, TransformMethod};

/// Where the edge probabilities fed to the transforms come from.
#[derive(Debug, Clone, Copy)]
pub enum QSource<'a> {
    /// The data-generating `σ(η)`.
    Truth,
    Fitted(&'a ModelBundle),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformComparison {
    pub exact: TransformErrors,
    pub continuous: TransformErrors,
}

/// `count` distinct subject indices drawn with the sampling stream of `seed`.
pub fn sample_subjects(n_subjects: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream(seed, Stream::Sampling);
    let mut idx = sample(&mut rng, n_subjects, count.min(n_subjects)).into_vec();
    idx.sort_unstable();
    idx
}

/// Distribution at `t2` from state 0 at time 0 for each listed subject.
pub fn estimated_cumulative(
    sim: &Simulation,
    source: QSource<'_>,
    subjects: &[usize],
    t2: u32,
    method: TransformMethod,
) -> Result<Array2<f64>> {
    let space = sim.truth.spec.space();
    let k = space.n_states();
    let mut out = Array2::zeros((subjects.len(), k));
    match source {
        QSource::Truth => {
            let q = sim.truth.true_q_rows(subjects, t2);
            let h = t2 as usize;
            for n in 0..subjects.len() {
                let (m, _) = compound_q_rows(&space, q.slice(ndarray::s![n * h..(n + 1) * h, ..]), method)?;
                out.row_mut(n).assign(&m.row(0));
            }
        }
        QSource::Fitted(bundle) => {
            let panel = sim.panel.select(subjects);
            let preds = bundle.predict_span(&panel, 0, t2, method)?;
            if preds.len() != subjects.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} predictions for {} subjects",
                    preds.len(),
                    subjects.len()
                )));
            }
            for (n, p) in preds.iter().enumerate() {
                out.row_mut(n).assign(&p.probs);
            }
        }
    }
    Ok(out)
}

/// Errors of both transforms for the listed subjects at `t2`.
pub fn compare_transforms(
    sim: &Simulation,
    source: QSource<'_>,
    subjects: &[usize],
    t2: u32,
) -> Result<TransformComparison> {
    let truth = sim.truth.true_cumulative(subjects, t2)?;
    let exact = estimated_cumulative(sim, source, subjects, t2, TransformMethod::Exact)?;
    let continuous = estimated_cumulative(sim, source, subjects, t2, TransformMethod::Continuous)?;
    Ok(TransformComparison {
        exact: transform_error_report(&truth, &exact)?,
        continuous: transform_error_report(&truth, &continuous)?,
    })
}

/// Additive design matching the simulated covariates: linear `x1`, `x2`,
/// splines of time and `z`, and a network on all three covariates.
pub fn simulation_design() -> DesignSpec {
    DesignSpec {
        linear_terms: vec!["x1".into(), "x2".into()],
        spline_terms: vec![SplineTerm::new("t", 10), SplineTerm::new("z", 10)],
        standardise: false,
        network_inputs: vec!["x1".into(), "x2".into(), "z".into()],
        ..Default::default()
    }
}

/// Epoch cap of [`simulation_fit_config`].
pub const SIMULATION_MAX_EPOCHS: usize = 40;
/// Early-stopping patience of [`simulation_fit_config`].
pub const SIMULATION_PATIENCE: usize = 5;

/// Training protocol for simulated panels: two hidden layers of 100 and 50
/// ReLU units with 25% dropout, plain SGD at rate 0.01 and batches of 32.
pub fn simulation_fit_config(seed: u64) -> FitConfig {
    FitConfig {
        batch_size: 32,
        max_epochs: SIMULATION_MAX_EPOCHS,
        patience: SIMULATION_PATIENCE,
        optimizer: OptimizerKind::Sgd,
        lr: LrSchedule::constant(0.01),
        network: NetworkConfig { hidden: vec![100, 50], dropout_rate: 0.25, ..Default::default() },
        seed,
        ..Default::default()
    }
}

fn supports_recovery(design: &DesignSpec) -> bool {
    let linear = |c: &str| design.linear_terms.iter().any(|t| t == c);
    let spline = |c: &str| design.spline_terms.iter().any(|t| t.column == c);
    design.include_intercept && linear("x1") && linear("x2") && spline(TIME_COLUMN) && spline("z")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub continuous: ReplicateSummary,
    pub exact: ReplicateSummary,
    /// Replicates where the exact transform has the smaller MSE and MAE on every target.
    pub exact_better: usize,
}

/// True when `exact` beats `continuous` on every MSE and MAE entry.
pub fn exact_wins(c: &TransformComparison) -> bool {
    let beats = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(e, c)| e < c);
    beats(&c.exact.mse, &c.continuous.mse) && beats(&c.exact.mae, &c.continuous.mae)
}

/// Mean and spread of both transforms over replicates.
pub fn summarise(reps: &[TransformComparison]) -> Result<MethodSummary> {
    let cont: Vec<TransformErrors> = reps.iter().map(|r| r.continuous.clone()).collect();
    let exact: Vec<TransformErrors> = reps.iter().map(|r| r.exact.clone()).collect();
    Ok(MethodSummary {
        continuous: summarise_replicates(&cont)?,
        exact: summarise_replicates(&exact)?,
        exact_better: reps.iter().filter(|r| exact_wins(r)).count(),
    })
}

/// Transform errors of one simulated replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReplicate {
    pub seed: u64,
    pub true_q: TransformComparison,
    pub fitted_q: Option<TransformComparison>,
    /// Coefficient and curve errors of the fit, when the design has the
    /// terms `recovery_report` compares.
    pub recovery: Option<RecoveryReport>,
}

/// Simulates `spec`, optionally fits every edge, and scores both transforms
/// at `t2` on `n_eval` subjects drawn with the sampling stream.
pub fn transform_study_replicate(
    spec: &DgpSpec,
    fit: Option<(&DesignSpec, &FitConfig)>,
    n_eval: usize,
    t2: u32,
) -> Result<StudyReplicate> {
    let sim = simulate_panel(spec)?;
    let subjects = sample_subjects(spec.n_subjects, n_eval, spec.seed);
    let true_q = compare_transforms(&sim, QSource::Truth, &subjects, t2)?;
    let (fitted_q, recovery) = match fit {
        Some((design, cfg)) => {
            let bundle = fit_all(&sim.panel, design, cfg, &BundleOptions::default())?;
            let recovery = if supports_recovery(design) { Some(recovery_report(&bundle, spec)?) } else { None };
            (Some(compare_transforms(&sim, QSource::Fitted(&bundle), &subjects, t2)?), recovery)
        }
        None => (None, None),
    };
    Ok(StudyReplicate { seed: spec.seed, true_q, fitted_q, recovery })
}
