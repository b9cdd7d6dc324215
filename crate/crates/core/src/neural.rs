//! Feed-forward network for the unstructured predictor term, with
//! hand-written backward pass, inverted dropout and Adam.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Gelu,
}

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_C: f64 = 0.044_715;

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Gelu => 0.5 * x * (1.0 + (GELU_K * (x + GELU_C * x * x * x)).tanh()),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let th = (GELU_K * (x + GELU_C * x * x * x)).tanh();
                0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * GELU_K * (1.0 + 3.0 * GELU_C * x * x)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    /// Input width, hidden widths, then the single output unit.
    pub layer_widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub dropout_rate: f64,
    #[serde(default)]
    pub l2_penalty: f64,
}

impl MlpConfig {
    pub fn new(inputs: usize, hidden: &[usize]) -> Self {
        let mut layer_widths = vec![inputs];
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(1);
        Self { layer_widths, activation: Activation::Relu, dropout_rate: 0.0, l2_penalty: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.layer_widths;
        if w.len() < 3 {
            return Err(Error::InvalidConfig("network needs at least one hidden layer".into()));
        }
        if *w.last().unwrap() != 1 {
            return Err(Error::InvalidConfig("network output width must be 1".into()));
        }
        if w.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::InvalidConfig("L2 penalty must be non-negative".into()));
        }
        Ok(())
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.layer_widths[1..self.layer_widths.len() - 1]
    }
}

/// A fully connected layer computing `a W + b`; `W` is fan_in × fan_out.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediate values of a forward pass needed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Output of each hidden layer after activation and dropout.
    post: Vec<Array2<f64>>,
    /// Scaled dropout masks (0 or 1/(1-rate)) per hidden layer, if sampled.
    masks: Vec<Option<Array2<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<Dense>,
}

/// Serialised form: nested row-major weight arrays, input layer first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpState {
    pub config: MlpConfig,
    pub layers: Vec<LayerWeights>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(config: MlpConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layer_widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn from_layers(config: MlpConfig, layers: Vec<Dense>) -> Result<Self> {
        config.validate()?;
        let ok = layers.len() + 1 == config.layer_widths.len()
            && layers
                .iter()
                .zip(config.layer_widths.windows(2))
                .all(|(l, w)| l.weights.dim() == (w[0], w[1]) && l.bias.len() == w[1]);
        if !ok {
            return Err(Error::ShapeMismatch("layer shapes disagree with widths".into()));
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn n_inputs(&self) -> usize {
        self.config.layer_widths[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Weight and bias buffers in the order used by `MlpGrads::slices`.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Sets the final linear layer to zero; hidden layers keep their weights.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("at least one layer");
        last.weights.fill(0.0);
        last.bias.fill(0.0);
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.layers.iter().flat_map(|l| [l.weights.len(), l.bias.len()]).collect()
    }

    /// `Σ ||W||²` over weight matrices (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum()
    }

    fn check_width(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::ShapeMismatch(format!("network expects {} inputs, got {}", self.n_inputs(), x.ncols())));
        }
        Ok(())
    }

    /// Forward pass; train mode draws dropout masks from `rng`.
    pub fn forward<R: RngCore>(
        &self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array1<f64>, ForwardCache)> {
        self.forward_impl(x, mode, Some(rng))
    }

    fn forward_impl(
        &self,
        x: ArrayView2<'_, f64>,
        mode: Mode,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Array1<f64>, ForwardCache)> {
        self.check_width(&x)?;
        let act = self.config.activation;
        let rate = self.config.dropout_rate;
        let n_hidden = self.layers.len() - 1;
        let mut cache = ForwardCache {
            pre: Vec::with_capacity(n_hidden),
            post: Vec::with_capacity(n_hidden),
            masks: Vec::with_capacity(n_hidden),
        };
        for (li, layer) in self.layers[..n_hidden].iter().enumerate() {
            let input = if li == 0 { x.view() } else { cache.post[li - 1].view() };
            let z = input.dot(&layer.weights) + &layer.bias;
            let mut a = z.mapv(|v| act.apply(v));
            let mask = if let (Mode::Train, true, Some(rng)) = (mode, rate > 0.0, rng.as_deref_mut()) {
                let keep = 1.0 / (1.0 - rate);
                let m = Array2::from_shape_fn(a.dim(), |_| if rng.random::<f64>() < rate { 0.0 } else { keep });
                a *= &m;
                Some(m)
            } else {
                None
            };
            if !a.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteActivation(li));
            }
            cache.pre.push(z);
            cache.post.push(a);
            cache.masks.push(mask);
        }
        let last = &self.layers[n_hidden];
        let input = if n_hidden == 0 { x.view() } else { cache.post[n_hidden - 1].view() };
        let out = input.dot(&last.weights.column(0)) + last.bias[0];
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteActivation(n_hidden));
        }
        Ok((out, cache))
    }

    /// Deterministic evaluation-mode output.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.forward_impl(x, Mode::Eval, None)?.0)
    }

    /// Gradients of `Σ_i upstream_i · out_i + l2 Σ ||W||²` with respect to
    /// every weight and bias, given the cache of the paired forward call.
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        cache: &ForwardCache,
        upstream: ArrayView1<'_, f64>,
    ) -> Result<MlpGrads> {
        self.check_width(&x)?;
        if upstream.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!("{} upstream gradients for {} rows", upstream.len(), x.nrows())));
        }
        let act = self.config.activation;
        let n_layers = self.layers.len();
        let mut dw = Vec::with_capacity(n_layers);
        let mut db = Vec::with_capacity(n_layers);
        let mut delta = upstream.to_owned().insert_axis(Axis(1));
        for li in (0..n_layers).rev() {
            let input = if li == 0 { x.view() } else { cache.post[li - 1].view() };
            let mut gw = input.t().dot(&delta).as_standard_layout().into_owned();
            if self.config.l2_penalty > 0.0 {
                gw.scaled_add(2.0 * self.config.l2_penalty, &self.layers[li].weights);
            }
            dw.push(gw);
            db.push(delta.sum_axis(Axis(0)));
            if li > 0 {
                let mut back = delta.dot(&self.layers[li].weights.t());
                let pre = &cache.pre[li - 1];
                match &cache.masks[li - 1] {
                    Some(m) => Zip::from(&mut back).and(pre).and(m).for_each(|b, &z, &m| *b *= m * act.derivative(z)),
                    None => Zip::from(&mut back).and(pre).for_each(|b, &z| *b *= act.derivative(z)),
                }
                delta = back;
            }
        }
        dw.reverse();
        db.reverse();
        Ok(MlpGrads { weights: dw, biases: db })
    }

    pub fn to_state(&self) -> MlpState {
        MlpState {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerWeights {
                    weights: l.weights.outer_iter().map(|r| r.to_vec()).collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_state(state: &MlpState) -> Result<Self> {
        let mut layers = Vec::with_capacity(state.layers.len());
        for l in &state.layers {
            let rows = l.weights.len();
            let cols = l.weights.first().map_or(0, |r| r.len());
            if l.weights.iter().any(|r| r.len() != cols) {
                return Err(Error::ShapeMismatch("ragged weight matrix".into()));
            }
            let flat: Vec<f64> = l.weights.iter().flatten().copied().collect();
            let weights =
                Array2::from_shape_vec((rows, cols), flat).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
            layers.push(Dense { weights, bias: Array1::from(l.bias.clone()) });
        }
        Self::from_layers(state.config.clone(), layers)
    }
}

/// `α(t) = α₀ γ^⌊t/s⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub step: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self { initial: 1e-3, decay: 1.0, step: 1 }
    }
}

impl LrSchedule {
    pub fn constant(rate: f64) -> Self {
        Self { initial: rate, decay: 1.0, step: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0) || !(self.decay > 0.0 && self.decay <= 1.0) || self.step == 0 {
            return Err(Error::InvalidConfig(format!("invalid learning-rate schedule {self:?}")));
        }
        Ok(())
    }

    pub fn rate(&self, t: u64) -> f64 {
        self.initial * self.decay.powi((t / self.step).min(i32::MAX as u64) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |b: f64| b > 0.0 && b < 1.0;
        if !open(self.beta1) || !open(self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

/// Adam over a fixed list of parameter buffers.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    schedule: LrSchedule,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize], config: AdamConfig, schedule: LrSchedule) -> Result<Self> {
        config.validate()?;
        schedule.validate()?;
        Ok(Self {
            config,
            schedule,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn current_rate(&self) -> f64 {
        self.schedule.rate(self.t)
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len(), "parameter group count");
        assert_eq!(grads.len(), self.m.len(), "gradient group count");
        let AdamConfig { beta1, beta2, eps } = self.config;
        let lr = self.schedule.rate(self.t);
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for (g_idx, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[g_idx], &mut self.v[g_idx]);
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain minibatch gradient descent.
    Sgd,
}

/// Either optimiser behind one stepping interface.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Sgd { schedule: LrSchedule, t: u64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, sizes: &[usize], adam: AdamConfig, schedule: LrSchedule) -> Result<Self> {
        match kind {
            OptimizerKind::Adam => Ok(Self::Adam(Adam::new(sizes, adam, schedule)?)),
            OptimizerKind::Sgd => {
                schedule.validate()?;
                Ok(Self::Sgd { schedule, t: 0 })
            }
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            Self::Adam(a) => a.steps(),
            Self::Sgd { t, .. } => *t,
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        match self {
            Self::Adam(a) => a.step(params, grads),
            Self::Sgd { schedule, t } => {
                let lr = schedule.rate(*t);
                *t += 1;
                for (p, g) in params.iter_mut().zip(grads) {
                    p.iter_mut().zip(g.iter()).for_each(|(p, g)| *p -= lr * g);
                }
            }
        }
    }
}
