//! Synthetic delinquency panels with known transition probabilities.
//!
//! Every edge's predictor is an intercept, two linear effects, a
//! duration baseline drawn as a second-order random walk, a catalogue
//! nonlinear effect of a third covariate and an optional `x1·x2`
//! interaction. Probabilities out of a state follow a multinomial logit
//! with the stay predictor fixed at zero.

mod aj;
mod compare;
mod mortgage;
mod nonlinear;
mod recovery;

pub use aj::{aalen_johansen, AjEstimate};
pub use compare::{
    compare_transforms, estimated_cumulative, exact_wins, sample_subjects, simulation_design, simulation_fit_config,
    summarise, transform_study_replicate, MethodSummary, QSource, StudyReplicate, TransformComparison,
    SIMULATION_MAX_EPOCHS, SIMULATION_PATIENCE,
};
pub use mortgage::{mortgage_columns, synthetic_mortgage_panel, MortgageSpec};
pub use nonlinear::{unit_grid, Nonlinear, N_NONLINEAR};
pub use recovery::{recovery_report, EdgeRecovery, RecoveryReport, RECOVERY_GRID};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{ColumnKind, CovariateSchema, Edge, Panel, StateSpace, SubjectPath};
use crate::rng::{stream, Stream};
use crate::transitions::compound;

pub const DEFAULT_HORIZON: u32 = 36;
pub const DEFAULT_RW_SIGMA: f64 = 0.02;
/// Seed of the true baseline curves; fixed so that replicates share them.
pub const DEFAULT_CURVE_SEED: u64 = 1789;
pub const COVARIATES: [&str; 3] = ["x1", "x2", "z"];

/// (intercept, x1 slope, x2 slope, nonlinear id) per delinquency edge.
const DEFAULT_EFFECTS: [(f64, f64, f64, usize); 6] = [
    (-1.20, 0.445, -0.445, 1),
    (-0.05, -0.445, 0.445, 5),
    (0.69, 0.445, 0.445, 3),
    (-0.51, -0.445, 0.445, 4),
    (-2.45, 0.445, -0.445, 2),
    (-3.03, 0.445, 0.445, 6),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEffects {
    pub edge: Edge,
    pub intercept: f64,
    pub slope_x1: f64,
    pub slope_x2: f64,
    pub nonlinear: usize,
    /// Baseline at t = 0..=horizon, summing to zero.
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n_subjects: usize,
    pub horizon: u32,
    pub edges: Vec<EdgeEffects>,
    pub include_interaction: bool,
    pub rw_sigma: f64,
    pub curve_seed: u64,
    pub seed: u64,
}

/// Second-order random walk started at zero and centred to mean zero.
pub fn gen_baseline<R: Rng + ?Sized>(horizon: u32, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("random-walk sigma {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).expect("checked above");
    let n = horizon as usize + 1;
    let mut f = vec![0.0; n];
    for t in 2..n {
        f[t] = 2.0 * f[t - 1] - f[t - 2] + normal.sample(rng);
    }
    let mean = f.iter().sum::<f64>() / n as f64;
    f.iter_mut().for_each(|v| *v -= mean);
    Ok(f)
}

impl DgpSpec {
    /// Default coefficients with baselines drawn from `DEFAULT_CURVE_SEED`.
    pub fn standard(n_subjects: usize, seed: u64) -> Result<Self> {
        Self::with_curves(n_subjects, DEFAULT_HORIZON, DEFAULT_RW_SIGMA, DEFAULT_CURVE_SEED, seed)
    }

    pub fn with_curves(n_subjects: usize, horizon: u32, rw_sigma: f64, curve_seed: u64, seed: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!("horizon {horizon} is below 2")));
        }
        let space = StateSpace::delinquency();
        let mut rng = stream(curve_seed, Stream::Baseline);
        let edges = space
            .edges()
            .iter()
            .zip(DEFAULT_EFFECTS)
            .map(|(&edge, (intercept, slope_x1, slope_x2, nonlinear))| {
                Ok(EdgeEffects {
                    edge,
                    intercept,
                    slope_x1,
                    slope_x2,
                    nonlinear,
                    baseline: gen_baseline(horizon, rw_sigma, &mut rng)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { n_subjects, horizon, edges, include_interaction: true, rw_sigma, curve_seed, seed })
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::delinquency()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::InvalidConfig(format!("horizon {} is below 2", self.horizon)));
        }
        let space = self.space();
        if self.edges.iter().map(|e| e.edge).ne(space.edges().iter().copied()) {
            return Err(Error::InvalidConfig("simulation edges must list the delinquency edges in order".into()));
        }
        for e in &self.edges {
            Nonlinear::new(e.nonlinear)?;
            if e.baseline.len() != self.horizon as usize + 1 {
                return Err(Error::InvalidConfig(format!("edge {}: baseline has {} points", e.edge, e.baseline.len())));
            }
            let total: f64 = e.baseline.iter().sum();
            if total.abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("edge {}: baseline sums to {total}", e.edge)));
            }
            if ![e.intercept, e.slope_x1, e.slope_x2].iter().chain(&e.baseline).all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig(format!("edge {}: non-finite effect", e.edge)));
            }
        }
        Ok(())
    }

    /// Linear predictor of edge index `e` for covariates `(x1, x2, z)` at `t`.
    pub fn edge_eta(&self, e: usize, cov: &[f64; 3], t: u32) -> f64 {
        let fx = &self.edges[e];
        let [x1, x2, z] = *cov;
        let nonlinear = Nonlinear::new(fx.nonlinear).map(|f| f.eval(z)).unwrap_or(0.0);
        let interaction = if self.include_interaction { x1 * x2 } else { 0.0 };
        fx.intercept + fx.slope_x1 * x1 + fx.slope_x2 * x2 + fx.baseline[t as usize] + nonlinear + interaction
    }

    /// Binary edge probabilities `σ(η)` at `t`, in edge order.
    pub fn true_edge_q(&self, cov: &[f64; 3], t: u32) -> Vec<f64> {
        (0..self.edges.len()).map(|e| 1.0 / (1.0 + (-self.edge_eta(e, cov, t)).exp())).collect()
    }

    /// Multinomial-logit probabilities of moving from `from` to each exit at `t`.
    pub fn exit_probs(&self, cov: &[f64; 3], from: usize, t: u32) -> Vec<(usize, f64)> {
        let etas: Vec<(usize, f64)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, fx)| fx.edge.0 == from)
            .map(|(e, fx)| (fx.edge.1, self.edge_eta(e, cov, t)))
            .collect();
        let top = etas.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
        let stay = (-top).exp();
        let total = stay + etas.iter().map(|&(_, v)| (v - top).exp()).sum::<f64>();
        etas.into_iter().map(|(to, v)| (to, (v - top).exp() / total)).collect()
    }

    /// True one-step matrix from `t - 1` to `t`.
    pub fn one_step_matrix(&self, cov: &[f64; 3], t: u32) -> Array2<f64> {
        let space = self.space();
        let k = space.n_states();
        let mut m = Array2::zeros((k, k));
        for from in 0..k {
            if space.is_absorbing(from) {
                m[[from, from]] = 1.0;
                continue;
            }
            let mut out = 0.0;
            for (to, p) in self.exit_probs(cov, from, t) {
                m[[from, to]] = p;
                out += p;
            }
            m[[from, from]] = 1.0 - out;
        }
        m
    }
}

/// Covariates and spec needed to recompute every true probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub spec: DgpSpec,
    /// `(x1, x2, z)` per subject, in panel order.
    pub covariates: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub panel: Panel,
    pub truth: SimTruth,
}

pub fn subject_id(i: usize) -> String {
    format!("s{i:07}")
}

/// Draws one path per subject from its own random stream.
pub fn simulate_panel(spec: &DgpSpec) -> Result<Simulation> {
    spec.validate()?;
    let space = spec.space();
    let schema =
        CovariateSchema::new(COVARIATES.iter().map(|c| (c.to_string(), ColumnKind::Numeric, Vec::new())).collect())?;
    let draws: Vec<(SubjectPath, [f64; 3])> = (0..spec.n_subjects)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(spec.seed, Stream::Subject(i as u64));
            let cov: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let mut states = vec![0usize];
            let mut state = 0;
            for t in 1..=spec.horizon {
                if space.is_absorbing(state) {
                    break;
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut next = state;
                for (to, p) in spec.exit_probs(&cov, state, t) {
                    acc += p;
                    if u < acc {
                        next = to;
                        break;
                    }
                }
                state = next;
                states.push(state);
            }
            let numeric = states.iter().flat_map(|_| cov).collect();
            (SubjectPath { id: subject_id(i), origin_offset: 0, states, numeric, categorical: Vec::new() }, cov)
        })
        .collect();
    let (subjects, covariates): (Vec<_>, Vec<_>) = draws.into_iter().unzip();
    let panel = Panel::new(space, schema, subjects)?;
    Ok(Simulation { panel, truth: SimTruth { spec: spec.clone(), covariates } })
}

impl SimTruth {
    /// True distribution at `t2` for each listed subject, starting in state 0
    /// at time 0, by compounding the true one-step matrices.
    pub fn true_cumulative(&self, subjects: &[usize], t2: u32) -> Result<Array2<f64>> {
        if t2 > self.spec.horizon {
            return Err(Error::InvalidRange { lo: 0.0, hi: t2 as f64 });
        }
        let k = self.spec.space().n_states();
        let mut out = Array2::zeros((subjects.len(), k));
        for (row, &i) in subjects.iter().enumerate() {
            let cov = self.covariates.get(i).ok_or_else(|| Error::ShapeMismatch(format!("no subject {i} in truth")))?;
            let mats: Vec<Array2<f64>> = (1..=t2).map(|t| self.spec.one_step_matrix(cov, t)).collect();
            out.row_mut(row).assign(&compound(k, &mats).row(0));
        }
        Ok(out)
    }

    /// True binary edge probabilities for months `1..=t2`, stacked as
    /// `subjects × t2` rows in edge order.
    pub fn true_q_rows(&self, subjects: &[usize], t2: u32) -> Array2<f64> {
        let n_edges = self.spec.edges.len();
        let mut q = Array2::zeros((subjects.len() * t2 as usize, n_edges));
        for (n, &i) in subjects.iter().enumerate() {
            for t in 1..=t2 {
                let row = n * t2 as usize + (t - 1) as usize;
                for (e, v) in self.spec.true_edge_q(&self.covariates[i], t).into_iter().enumerate() {
                    q[[row, e]] = v;
                }
            }
        }
        q
    }
}
