//! Discrete-time product-limit (Aalen–Johansen) estimator.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::panel::Panel;

#[derive(Debug, Clone, PartialEq)]
pub struct AjEstimate {
    /// `cumulative[t]` estimates P(Z(t) = l | Z(0) = k); `cumulative[0]` is I.
    pub cumulative: Vec<Array2<f64>>,
    /// `at_risk[t][k]`: subjects observed in `k` at `t - 1` and again at `t`.
    pub at_risk: Vec<Vec<u64>>,
    /// `step[t]`: empirical one-step matrix from `t - 1` to `t` (`step[0]` is I).
    pub step: Vec<Array2<f64>>,
}

impl AjEstimate {
    pub fn horizon(&self) -> u32 {
        (self.cumulative.len() - 1) as u32
    }
}

/// Subjects leave the risk sets once their path ends; absorbed subjects stay
/// absorbed.
pub fn aalen_johansen(panel: &Panel) -> Result<AjEstimate> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let space = panel.space();
    let k = space.n_states();
    let horizon = panel.subjects().iter().map(|s| s.last_time()).max().unwrap_or(0) as usize;
    let mut counts = vec![Array2::<f64>::zeros((k, k)); horizon + 1];
    for s in panel.subjects() {
        for (t, w) in s.states.windows(2).enumerate() {
            counts[t + 1][[w[0], w[1]]] += 1.0;
        }
    }
    let eye = Array2::<f64>::eye(k);
    let mut cumulative = vec![eye.clone()];
    let mut step = vec![eye.clone()];
    let mut at_risk = vec![vec![0; k]];
    for c in counts.iter().skip(1) {
        let mut m = eye.clone();
        let mut risk = vec![0u64; k];
        for from in 0..k {
            let r: f64 = c.row(from).sum();
            risk[from] = r as u64;
            if r == 0.0 || space.is_absorbing(from) {
                continue;
            }
            let mut moved = 0.0;
            for to in 0..k {
                if to != from {
                    m[[from, to]] = c[[from, to]] / r;
                    moved += m[[from, to]];
                }
            }
            m[[from, from]] = 1.0 - moved;
        }
        let next = cumulative.last().expect("non-empty").dot(&m);
        cumulative.push(next);
        step.push(m);
        at_risk.push(risk);
    }
    Ok(AjEstimate { cumulative, at_risk, step })
}
