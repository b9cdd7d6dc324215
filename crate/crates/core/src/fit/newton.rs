//! Penalised Newton iterations for the structured-only logit.

use ndarray::{s, Array1, Array2, Axis};

use super::{bce, sigmoid};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve};

#[derive(Debug, Clone)]
pub struct NewtonFit {
    pub beta: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ_i bce_i + βᵀ S β` at the returned coefficients.
    pub objective: f64,
}

const CHUNK: usize = 8192;

fn objective(x: &Array2<f64>, y: &[f64], s: &Array2<f64>, beta: &Array1<f64>) -> f64 {
    let eta = x.dot(beta);
    let nll: f64 = eta.iter().zip(y).map(|(&e, &y)| bce(e, y)).sum();
    nll + beta.dot(&s.dot(beta))
}

/// Minimises `Σ_i bce(x_iβ, y_i) + βᵀSβ` with step-halving Newton steps.
/// `s` already carries the smoothing parameters; dividing the objective by
/// `n` gives the mean cross-entropy plus `λβᵀSβ/n`.
pub fn penalised_newton(
    x: &Array2<f64>,
    y: &[f64],
    s: &Array2<f64>,
    start: Option<&Array1<f64>>,
    max_iter: usize,
    tol: f64,
) -> Result<NewtonFit> {
    let (n, m) = x.dim();
    if y.len() != n || s.dim() != (m, m) {
        return Err(Error::ShapeMismatch(format!("Newton: X is {n}×{m}, y has {}, S is {:?}", y.len(), s.dim())));
    }
    let mut beta = start.cloned().unwrap_or_else(|| Array1::zeros(m));
    let mut current = objective(x, y, s, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let eta = x.dot(&beta);
        let mut grad = s.dot(&beta) * 2.0;
        let mut hess = s * 2.0;
        let mut start_row = 0;
        while start_row < n {
            let end = (start_row + CHUNK).min(n);
            let xc = x.slice(s![start_row..end, ..]);
            let mut resid = Array1::zeros(end - start_row);
            let mut sw = Array1::zeros(end - start_row);
            for (i, r) in (start_row..end).enumerate() {
                let p = sigmoid(eta[r]);
                resid[i] = p - y[r];
                sw[i] = (p * (1.0 - p)).sqrt();
            }
            grad += &xc.t().dot(&resid);
            let xw = &xc * &sw.insert_axis(Axis(1));
            hess += &xw.t().dot(&xw);
            start_row = end;
        }
        let trace: f64 = hess.diag().sum();
        let step = match cholesky(&hess) {
            Some(l) => cholesky_solve(&l, &grad),
            None => {
                // near-separated data: a tiny ridge keeps the system solvable
                let mut ridged = hess.clone();
                let jitter = 1e-10 * trace.max(1.0) / m as f64;
                ridged.diag_mut().mapv_inplace(|v| v + jitter);
                let l = cholesky(&ridged).ok_or_else(|| Error::Diverged {
                    epoch: iterations,
                    reason: "Newton Hessian is not positive definite".into(),
                })?;
                cholesky_solve(&l, &grad)
            }
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate = &beta - &(&step * scale);
            let value = objective(x, y, s, &candidate);
            if value.is_finite() && value <= current {
                accepted = Some((candidate, value));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, value)) = accepted else {
            converged = true;
            break;
        };
        let change = (&next - &beta).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let size = beta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let improvement = current - value;
        beta = next;
        current = value;
        if change <= tol * (1.0 + size) || improvement <= 1e-15 * current.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !beta.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged { epoch: iterations, reason: "non-finite Newton coefficients".into() });
    }
    Ok(NewtonFit { beta, iterations, converged, objective: current })
}
