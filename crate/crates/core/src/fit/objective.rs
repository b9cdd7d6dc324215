//! The minibatch training objective and its analytic gradient.

use ndarray::{Array1, Array2, ArrayView2};
use rand::RngCore;

use super::{bce, sigmoid};
use crate::error::{Error, Result};
use crate::neural::{Mlp, MlpGrads, Mode};

#[derive(Debug, Clone)]
pub struct ObjectiveGrad {
    /// Mean logit NLL plus both penalties.
    pub loss: f64,
    /// Unscaled NLL summed over the batch rows.
    pub nll_sum: f64,
    pub beta: Array1<f64>,
    pub net: MlpGrads,
}

/// Objective of one minibatch:
///
/// `mean_i NLL(y_i, x_iᵀβ + net(u_i)) + βᵀPβ / n_train + l2 Σ ||W||²`
///
/// The smoothing penalty is spread over the `n_train` training rows so that
/// one epoch of batches adds up to the penalised full-data objective. In
/// train mode dropout masks are drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn objective_and_gradient<R: RngCore>(
    beta: &Array1<f64>,
    net: &Mlp,
    x: ArrayView2<'_, f64>,
    u: ArrayView2<'_, f64>,
    y: &[f64],
    penalty: &Array2<f64>,
    n_train: usize,
    mode: Mode,
    rng: &mut R,
) -> Result<ObjectiveGrad> {
    if x.nrows() != y.len()
        || u.nrows() != y.len()
        || beta.len() != x.ncols()
        || penalty.dim() != (x.ncols(), x.ncols())
    {
        return Err(Error::ShapeMismatch(format!(
            "objective: X {:?}, U {:?}, {} labels, {} coefficients, penalty {:?}",
            x.dim(),
            u.dim(),
            y.len(),
            beta.len(),
            penalty.dim()
        )));
    }
    let (net_out, cache) = net.forward(u, mode, rng)?;
    let eta = x.dot(beta) + &net_out;
    let inv = 1.0 / y.len() as f64;
    let mut nll_sum = 0.0;
    let mut upstream = Array1::zeros(y.len());
    for (k, &label) in y.iter().enumerate() {
        nll_sum += bce(eta[k], label);
        upstream[k] = (sigmoid(eta[k]) - label) * inv;
    }
    let p_beta = penalty.dot(beta);
    let scale = 1.0 / n_train as f64;
    let mut beta_grad = x.t().dot(&upstream);
    beta_grad.scaled_add(2.0 * scale, &p_beta);
    let net_grads = net.backward(u, &cache, upstream.view())?;
    let loss = nll_sum * inv + scale * beta.dot(&p_beta) + net.config().l2_penalty * net.weight_sq_norm();
    Ok(ObjectiveGrad { loss, nll_sum, beta: beta_grad, net: net_grads })
}
