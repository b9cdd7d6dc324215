//! Per-edge binary logit models with a structured additive predictor and an
//! optional orthogonalised network term.

pub mod bootstrap;
pub mod bundle;
mod newton;
mod objective;
mod train;

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::design::{
    block_penalty, design_rows, factorise, fit_preprocess, network_inputs, BlockKind, DesignSpec, PreprocessParams,
    WoeMap,
};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::neural::{Activation, AdamConfig, LrSchedule, Mlp, MlpConfig, MlpState, OptimizerKind};
use crate::panel::{Edge, TransitionDataset};

pub use bootstrap::{bootstrap_intervals, grid_search, BootstrapSummary, CoefficientInterval, GridSearchResult};
pub use bundle::{fit_all, BundleOptions, ModelBundle, SpanPrediction, BUNDLE_FORMAT_VERSION};
pub use newton::{penalised_newton, NewtonFit};
pub use objective::{objective_and_gradient, ObjectiveGrad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    SemiStructured,
    StructuredOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub dropout_rate: f64,
    #[serde(default)]
    pub l2_penalty: f64,
}

fn default_hidden() -> Vec<usize> {
    vec![32, 16]
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { hidden: default_hidden(), activation: Activation::Relu, dropout_rate: 0.0, l2_penalty: 0.0 }
    }
}

impl NetworkConfig {
    pub fn mlp(&self, inputs: usize) -> MlpConfig {
        let mut cfg = MlpConfig::new(inputs, &self.hidden);
        cfg.activation = self.activation;
        cfg.dropout_rate = self.dropout_rate;
        cfg.l2_penalty = self.l2_penalty;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub mode: FitMode,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub optimizer: OptimizerKind,
    pub lr: LrSchedule,
    /// Only read when `optimizer` is Adam.
    pub adam: AdamConfig,
    pub network: NetworkConfig,
    /// Smoothing parameter for spline blocks not listed in `smoothing`.
    pub default_smoothing: f64,
    pub smoothing: BTreeMap<String, f64>,
    pub seed: u64,
    /// Start the structured coefficients at the penalised Newton solution.
    pub warm_start: bool,
    /// Record the structured share of the network output after every epoch.
    pub epoch_diagnostics: bool,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::SemiStructured,
            batch_size: 256,
            max_epochs: 100,
            patience: 10,
            validation_fraction: 0.1,
            optimizer: OptimizerKind::Adam,
            lr: LrSchedule::constant(1e-3),
            adam: AdamConfig::default(),
            network: NetworkConfig::default(),
            default_smoothing: 1.0,
            smoothing: BTreeMap::new(),
            seed: 0,
            warm_start: true,
            epoch_diagnostics: false,
            newton_max_iter: 100,
            newton_tol: 1e-10,
        }
    }
}

impl FitConfig {
    pub fn structured_only() -> Self {
        Self { mode: FitMode::StructuredOnly, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation fraction {} outside (0, 1)", self.validation_fraction));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("patience, batch size and epoch count must be positive".into());
        }
        if !(self.default_smoothing >= 0.0) || self.smoothing.values().any(|l| !(*l >= 0.0)) {
            return bad("smoothing parameters must be non-negative".into());
        }
        self.lr.validate()?;
        self.adam.validate()?;
        if self.mode == FitMode::SemiStructured {
            self.network.mlp(1).validate()?;
        }
        Ok(())
    }

    pub fn lambda(&self, block: &str) -> f64 {
        self.smoothing.get(block).copied().unwrap_or(self.default_smoothing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    /// Fraction of the network output norm lying in the structured column space.
    pub structured_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitMetadata {
    pub seed: u64,
    pub n_train: usize,
    pub n_validation: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Mean binary cross-entropy on the training rows.
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub converged: bool,
    /// `max_j |x_jᵀ e| / (‖x_j‖ ‖e‖)` for the unstructured predictor `e`.
    pub orthogonality: Option<f64>,
    /// `‖η_unstr‖ / ‖η_str‖` on the training rows.
    pub unstructured_ratio: Option<f64>,
    pub history: Vec<EpochRecord>,
}

/// A fitted binary logit for one permissible transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    pub edge: Edge,
    pub mode: FitMode,
    pub design_spec: DesignSpec,
    pub preprocess: PreprocessParams,
    /// Structured coefficients after moving the network's structured-space
    /// component into them.
    pub beta: Vec<f64>,
    /// Structured coefficients as trained.
    pub beta_raw: Vec<f64>,
    pub network: Option<MlpState>,
    pub metadata: FitMetadata,
    #[serde(skip)]
    net_cache: Option<Mlp>,
}

/// Rows per chunk when evaluating the network on large inputs.
const EVAL_CHUNK: usize = 32_768;

pub(crate) fn network_eval(net: &Mlp, u: &Array2<f64>) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(u.nrows());
    let mut start = 0;
    while start < u.nrows() {
        let end = (start + EVAL_CHUNK).min(u.nrows());
        out.slice_mut(s![start..end]).assign(&net.predict(u.slice(s![start..end, ..]))?);
        start = end;
    }
    Ok(out)
}

#[inline]
pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy `log(1 + e^η) - y η`, stable for large |η|.
#[inline]
pub(crate) fn bce(eta: f64, y: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p() - y * eta
}

pub(crate) fn mean_bce(eta: &Array1<f64>, y: &[f64]) -> f64 {
    eta.iter().zip(y).map(|(&e, &y)| bce(e, y)).sum::<f64>() / y.len().max(1) as f64
}

impl TransitionModel {
    fn network(&self) -> Result<Option<Mlp>> {
        if let Some(net) = &self.net_cache {
            return Ok(Some(net.clone()));
        }
        self.network.as_ref().map(Mlp::from_state).transpose()
    }

    /// Rebuilds the in-memory network after deserialisation.
    pub fn hydrate(&mut self) -> Result<()> {
        self.net_cache = self.network.as_ref().map(Mlp::from_state).transpose()?;
        Ok(())
    }

    pub fn column_names(&self) -> &[String] {
        &self.preprocess.column_names
    }

    /// Re-attributed coefficient by design column name.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.column_names().iter().position(|c| c == name).map(|j| self.beta[j])
    }

    pub fn coefficients(&self) -> BTreeMap<String, f64> {
        self.column_names().iter().cloned().zip(self.beta.iter().copied()).collect()
    }

    /// Slope of a standardised linear numeric column on the original scale.
    pub fn original_scale_slope(&self, column: &str) -> Option<f64> {
        let b = self.coefficient(column)?;
        match (self.design_spec.standardise, self.preprocess.standardisation.get(column)) {
            (true, Some(st)) => Some(b / st.sd),
            _ => Some(b),
        }
    }

    /// Fitted smooth `f(x)` of a spline term using re-attributed coefficients.
    pub fn smooth(&self, column: &str, xs: &[f64]) -> Result<Vec<f64>> {
        let (sp, block) = self.preprocess.spline(column).ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
        Ok(sp.curve(&self.beta[block.range()], xs))
    }

    pub fn structured_eta(&self, frame: &Frame) -> Result<Array1<f64>> {
        let x = design_rows(&self.design_spec, frame, &self.preprocess)?;
        Ok(x.dot(&Array1::from(self.beta.clone())))
    }

    /// Full predictor `Xβ_raw + net(u)`, equal to `Xβ + η_unstr`.
    pub fn predict_eta(&self, frame: &Frame) -> Result<Array1<f64>> {
        let x = design_rows(&self.design_spec, frame, &self.preprocess)?;
        let mut eta = x.dot(&Array1::from(self.beta_raw.clone()));
        if let Some(net) = self.network()? {
            let u = network_inputs(&self.design_spec, frame, &self.preprocess)?;
            eta += &network_eval(&net, &u)?;
        }
        Ok(eta)
    }

    /// Network term after removing its structured-space component.
    pub fn unstructured_eta(&self, frame: &Frame) -> Result<Array1<f64>> {
        Ok(self.predict_eta(frame)? - self.structured_eta(frame)?)
    }

    pub fn predict_q(&self, frame: &Frame) -> Result<Vec<f64>> {
        Ok(self.predict_eta(frame)?.iter().map(|&e| sigmoid(e)).collect())
    }
}

pub fn predict_q(model: &TransitionModel, frame: &Frame) -> Result<Vec<f64>> {
    model.predict_q(frame)
}

pub fn fit_transition(ds: &TransitionDataset<'_>, spec: &DesignSpec, cfg: &FitConfig) -> Result<TransitionModel> {
    fit_transition_with(ds, spec, cfg, None)
}

/// As `fit_transition`, reusing WOE maps fitted elsewhere for the listed columns.
pub fn fit_transition_with(
    ds: &TransitionDataset<'_>,
    spec: &DesignSpec,
    cfg: &FitConfig,
    shared_woe: Option<&BTreeMap<String, WoeMap>>,
) -> Result<TransitionModel> {
    ds.ensure_non_degenerate()?;
    cfg.validate()?;
    spec.validate()?;
    let frame = Frame::from_dataset(ds);
    let labels = ds.labels();
    let groups: Vec<usize> = ds.rows().iter().map(|r| r.subject).collect();
    fit_frame(ds.edge(), &frame, &labels, &groups, spec, cfg, shared_woe)
}

/// Fits on an explicit frame; `groups` assigns each row to a subject for the
/// validation split.
pub fn fit_frame(
    edge: Edge,
    frame: &Frame,
    labels: &[f64],
    groups: &[usize],
    spec: &DesignSpec,
    cfg: &FitConfig,
    shared_woe: Option<&BTreeMap<String, WoeMap>>,
) -> Result<TransitionModel> {
    if labels.len() != frame.n_rows() || groups.len() != frame.n_rows() {
        return Err(Error::ShapeMismatch("labels and groups must have one entry per row".into()));
    }
    let positives = labels.iter().filter(|&&y| y > 0.5).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateLabels { from: edge.0, to: edge.1, rows: labels.len(), positives });
    }
    let params = fit_preprocess(spec, frame, labels, shared_woe)?;
    let x = design_rows(spec, frame, &params)?;
    let lambda_s = scaled_penalty(&params, cfg);
    match cfg.mode {
        FitMode::StructuredOnly => {
            factorise(&x, &params.blocks)?;
            let fit = penalised_newton(&x, labels, &lambda_s, None, cfg.newton_max_iter, cfg.newton_tol)?;
            if !fit.converged {
                log::warn!("edge {edge}: Newton iterations stopped before convergence");
            }
            let eta = x.dot(&fit.beta);
            let beta = fit.beta.to_vec();
            Ok(TransitionModel {
                edge,
                mode: FitMode::StructuredOnly,
                design_spec: spec.clone(),
                preprocess: params,
                beta_raw: beta.clone(),
                beta,
                network: None,
                metadata: FitMetadata {
                    seed: cfg.seed,
                    n_train: labels.len(),
                    n_validation: 0,
                    epochs_run: fit.iterations,
                    best_epoch: fit.iterations,
                    train_loss: mean_bce(&eta, labels),
                    validation_loss: None,
                    converged: fit.converged,
                    orthogonality: None,
                    unstructured_ratio: None,
                    history: Vec::new(),
                },
                net_cache: None,
            })
        }
        FitMode::SemiStructured => {
            let u = network_inputs(spec, frame, &params)?;
            if u.ncols() == 0 {
                return Err(Error::InvalidConfig("semi-structured mode needs network inputs".into()));
            }
            let out = train::train_semi_structured(&x, &u, labels, groups, &params.blocks, &lambda_s, cfg)?;
            let mlp_state = out.net.to_state();
            Ok(TransitionModel {
                edge,
                mode: FitMode::SemiStructured,
                design_spec: spec.clone(),
                preprocess: params,
                beta: out.beta.to_vec(),
                beta_raw: out.beta_raw.to_vec(),
                network: Some(mlp_state),
                metadata: out.metadata,
                net_cache: Some(out.net),
            })
        }
    }
}

/// `Σ_blocks λ_b S_b` laid out over the full design.
fn scaled_penalty(params: &PreprocessParams, cfg: &FitConfig) -> Array2<f64> {
    let mut s = block_penalty(params);
    for b in params.blocks.iter().filter(|b| b.kind == BlockKind::Spline) {
        let l = cfg.lambda(&b.name);
        s.slice_mut(s![b.range(), b.range()]).mapv_inplace(|v| v * l);
    }
    s
}

pub(crate) fn select_rows(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(Axis(0), idx)
}
