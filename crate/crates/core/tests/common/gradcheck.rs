//! Central-difference checks of the training objective on small random problems.

use msm_core::fit::objective_and_gradient;
use msm_core::neural::{Activation, Mlp, MlpConfig, Mode};
use msm_core::rng::{stream, Stream};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

/// Random objective: design, network inputs, labels, penalty and network.
pub struct Problem {
    x: Array2<f64>,
    u: Array2<f64>,
    y: Vec<f64>,
    penalty: Array2<f64>,
    beta: Array1<f64>,
    net: Mlp,
    n_train: usize,
    mode: Mode,
    seed: u64,
}

pub fn problem(seed: u64) -> Option<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..20);
    let p = rng.random_range(1..5);
    let d = rng.random_range(1..4);
    let hidden: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(1..6)).collect();
    let mut cfg = MlpConfig::new(d, &hidden);
    cfg.activation = if rng.random_bool(0.5) { Activation::Gelu } else { Activation::Relu };
    cfg.l2_penalty = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
    cfg.dropout_rate = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
    let net = Mlp::init(cfg, &mut rng).ok()?;
    if net.n_params() > 50 {
        return None;
    }
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
    let u = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let y = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect();
    let a = Array2::from_shape_fn((p, p), |_| rng.random_range(-1.0..1.0));
    let penalty = a.t().dot(&a);
    let beta = Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0));
    let mode = if rng.random_bool(0.5) { Mode::Train } else { Mode::Eval };
    Some(Problem { x, u, y, penalty, beta, net, n_train: n + rng.random_range(0..50), mode, seed })
}

impl Problem {
    /// Same dropout masks on every call.
    fn loss(&self, beta: &Array1<f64>, net: &Mlp) -> f64 {
        let mut rng = stream(self.seed, Stream::Dropout);
        objective_and_gradient(
            beta,
            net,
            self.x.view(),
            self.u.view(),
            &self.y,
            &self.penalty,
            self.n_train,
            self.mode,
            &mut rng,
        )
        .unwrap()
        .loss
    }
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5 * analytic.abs().max(numeric.abs()) + 1e-9
}

/// Pre-activations near a ReLU kink make the finite difference meaningless.
/// Dropout masks are redrawn in the order the forward pass draws them.
pub fn near_kink(p: &Problem) -> bool {
    let cfg = p.net.config();
    if cfg.activation != Activation::Relu {
        return false;
    }
    let mut rng = stream(p.seed, Stream::Dropout);
    let dropout = p.mode == Mode::Train && cfg.dropout_rate > 0.0;
    let mut a = p.u.clone();
    for layer in &p.net.layers()[..p.net.layers().len() - 1] {
        let z = a.dot(&layer.weights) + &layer.bias;
        if z.iter().any(|v| v.abs() < 1e-3) {
            return true;
        }
        a = z.mapv(|v| v.max(0.0));
        if dropout {
            let keep = 1.0 / (1.0 - cfg.dropout_rate);
            a.mapv_inplace(|v| if rng.random::<f64>() < cfg.dropout_rate { 0.0 } else { v * keep });
        }
    }
    false
}

/// Compares every analytic partial derivative with a central difference.
/// `None` when the seed gives an oversized net or sits on a ReLU kink.
pub fn check(seed: u64) -> Option<Result<usize, String>> {
    let p = problem(seed)?;
    if near_kink(&p) {
        return None;
    }
    let mut rng = stream(p.seed, Stream::Dropout);
    let g =
        objective_and_gradient(&p.beta, &p.net, p.x.view(), p.u.view(), &p.y, &p.penalty, p.n_train, p.mode, &mut rng)
            .map_err(|e| e.to_string());
    let g = match g {
        Ok(g) => g,
        Err(e) => return Some(Err(e)),
    };
    if (g.loss - p.loss(&p.beta, &p.net)).abs() > 1e-14 {
        return Some(Err("loss differs between identical calls".into()));
    }
    for j in 0..p.beta.len() {
        let (mut up, mut down) = (p.beta.clone(), p.beta.clone());
        up[j] += STEP;
        down[j] -= STEP;
        let numeric = (p.loss(&up, &p.net) - p.loss(&down, &p.net)) / (2.0 * STEP);
        if !close(g.beta[j], numeric) {
            return Some(Err(format!("seed {seed} beta[{j}]: {} vs {numeric}", g.beta[j])));
        }
    }
    let analytic: Vec<f64> = g.net.slices().concat();
    if analytic.len() != p.net.n_params() {
        return Some(Err(format!("{} gradients for {} parameters", analytic.len(), p.net.n_params())));
    }
    for (k, &a) in analytic.iter().enumerate() {
        let shifted = |delta: f64| {
            let mut net = p.net.clone();
            let mut remaining = k;
            for slice in net.param_slices_mut() {
                if remaining < slice.len() {
                    slice[remaining] += delta;
                    break;
                }
                remaining -= slice.len();
            }
            p.loss(&p.beta, &net)
        };
        let numeric = (shifted(STEP) - shifted(-STEP)) / (2.0 * STEP);
        if !close(a, numeric) {
            return Some(Err(format!("seed {seed} net parameter {k}: {a} vs {numeric}")));
        }
    }
    Some(Ok(p.beta.len() + analytic.len()))
}
