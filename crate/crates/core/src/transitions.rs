//! Conversion of edge-wise binary probabilities into competing one-step
//! transition probabilities, one-step matrices and their products.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::StateSpace;

/// Edge probabilities are clamped into `[Q_EPS, 1 - Q_EPS]` before use.
pub const Q_EPS: f64 = 1e-12;

#[inline]
pub fn clamp_q(q: f64) -> f64 {
    q.clamp(Q_EPS, 1.0 - Q_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformMethod {
    /// Odds normalisation, consistent with the binary logits.
    #[default]
    Exact,
    /// First-order actuarial approximation.
    Continuous,
}

impl std::str::FromStr for TransformMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "discrete" => Ok(Self::Exact),
            "continuous" | "approx" => Ok(Self::Continuous),
            other => Err(Error::InvalidConfig(format!("unknown transform method `{other}`"))),
        }
    }
}

/// One-step probabilities out of `from`, including the stay probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PiRow {
    pub from: usize,
    pub probs: Vec<f64>,
    /// Set when a negative stay probability was clamped and the row rescaled.
    pub renormalised: bool,
}

impl PiRow {
    pub fn stay(&self) -> f64 {
        self.probs[self.from]
    }
}

const DELINQUENCY_STATES: usize = 4;

fn row4(from: usize, entries: &[(usize, f64)]) -> PiRow {
    let mut probs = vec![0.0; DELINQUENCY_STATES];
    for &(to, p) in entries {
        probs[to] = p;
    }
    PiRow { from, probs, renormalised: false }
}

pub fn exact_state0(q01: f64) -> PiRow {
    let q = clamp_q(q01);
    row4(0, &[(0, 1.0 - q), (1, q)])
}

pub fn exact_state1(q10: f64, q12: f64) -> PiRow {
    let (a, b) = (clamp_q(q10), clamp_q(q12));
    let d1 = 1.0 - a * b;
    row4(1, &[(0, a * (1.0 - b) / d1), (1, (1.0 - a) * (1.0 - b) / d1), (2, b * (1.0 - a) / d1)])
}

pub fn exact_state2(q20: f64, q21: f64, q23: f64) -> PiRow {
    let (a, b, c) = (clamp_q(q20), clamp_q(q21), clamp_q(q23));
    let d2 = 1.0 - a * c - a * b - b * c + 2.0 * a * b * c;
    row4(
        2,
        &[
            (0, a * (1.0 - b) * (1.0 - c) / d2),
            (1, b * (1.0 - a) * (1.0 - c) / d2),
            (2, (1.0 - a) * (1.0 - b) * (1.0 - c) / d2),
            (3, c * (1.0 - a) * (1.0 - b) / d2),
        ],
    )
}

fn finish_approx(from: usize, mut entries: Vec<(usize, f64)>) -> PiRow {
    let exits: f64 = entries.iter().map(|e| e.1).sum();
    let mut renormalised = false;
    let stay = if exits > 1.0 {
        renormalised = true;
        entries.iter_mut().for_each(|e| e.1 /= exits);
        0.0
    } else {
        1.0 - exits
    };
    entries.push((from, stay));
    let mut row = row4(from, &entries);
    row.renormalised = renormalised;
    row
}

pub fn approx_state1(q10: f64, q12: f64) -> PiRow {
    let (a, b) = (clamp_q(q10), clamp_q(q12));
    finish_approx(1, vec![(0, a * (1.0 - b / 2.0)), (2, b * (1.0 - a / 2.0))])
}

pub fn approx_state2(q20: f64, q21: f64, q23: f64) -> PiRow {
    let (a, b, c) = (clamp_q(q20), clamp_q(q21), clamp_q(q23));
    let adj = |x: f64, y: f64| 1.0 - (x + y) / 2.0 + x * y / 3.0;
    finish_approx(2, vec![(0, a * adj(b, c)), (1, b * adj(a, c)), (3, c * adj(a, b))])
}

/// Elementary symmetric polynomials `e_0..=e_n` of `xs`.
fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (i, &x) in xs.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Competing probabilities out of `from` given `(to, q)` for every exit edge.
///
/// The exact route normalises odds, `π_l = o_l / (1 + Σ o)` with
/// `o = q / (1 - q)`. The continuous route scales each `q_l` by
/// `Σ_j (-1)^j e_j(others) / (j + 1)`, which reduces to the usual two- and
/// three-exit actuarial corrections.
pub fn transform_exits(from: usize, n_states: usize, exits: &[(usize, f64)], method: TransformMethod) -> PiRow {
    let mut probs = vec![0.0; n_states];
    let qs: Vec<f64> = exits.iter().map(|e| clamp_q(e.1)).collect();
    let mut renormalised = false;
    match method {
        TransformMethod::Exact => {
            let odds: Vec<f64> = qs.iter().map(|q| q / (1.0 - q)).collect();
            let denom = 1.0 + odds.iter().sum::<f64>();
            for (&(to, _), o) in exits.iter().zip(&odds) {
                probs[to] = o / denom;
            }
            probs[from] = 1.0 / denom;
        }
        TransformMethod::Continuous => {
            let mut total = 0.0;
            for (i, &(to, _)) in exits.iter().enumerate() {
                let others: Vec<f64> = qs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| *q).collect();
                let e = elementary_symmetric(&others);
                let factor: f64 =
                    e.iter().enumerate().map(|(j, &ej)| (if j % 2 == 0 { ej } else { -ej }) / (j as f64 + 1.0)).sum();
                probs[to] = qs[i] * factor;
                total += probs[to];
            }
            if total > 1.0 {
                renormalised = true;
                for &(to, _) in exits {
                    probs[to] /= total;
                }
                probs[from] = 0.0;
            } else {
                probs[from] = 1.0 - total;
            }
        }
    }
    PiRow { from, probs, renormalised }
}

/// One-step matrix from edge probabilities aligned with `space.edges()`.
/// Returns the matrix and whether any row needed renormalising.
pub fn one_step_matrix(space: &StateSpace, q_by_edge: &[f64], method: TransformMethod) -> Result<(Array2<f64>, bool)> {
    let edges = space.edges();
    if q_by_edge.len() != edges.len() {
        return Err(Error::ShapeMismatch(format!("{} q values for {} edges", q_by_edge.len(), edges.len())));
    }
    let k = space.n_states();
    let mut p = Array2::zeros((k, k));
    let mut flagged = false;
    for from in 0..k {
        if space.is_absorbing(from) {
            p[[from, from]] = 1.0;
            continue;
        }
        let exits: Vec<(usize, f64)> =
            edges.iter().zip(q_by_edge).filter(|(e, _)| e.from() == from).map(|(e, &q)| (e.to(), q)).collect();
        let row = transform_exits(from, k, &exits, method);
        flagged |= row.renormalised;
        p.row_mut(from).assign(&Array1::from(row.probs));
    }
    Ok((p, flagged))
}

/// Assembles a matrix from rows for the transient states; absorbing rows
/// become unit vectors and states without a row stay put.
pub fn matrix_from_rows(space: &StateSpace, rows: &[PiRow]) -> Array2<f64> {
    let k = space.n_states();
    let mut p = Array2::eye(k);
    for row in rows.iter().filter(|r| !space.is_absorbing(r.from)) {
        p.row_mut(row.from).assign(&Array1::from(row.probs.clone()));
    }
    p
}

/// Left-to-right product `P(t1+1) P(t1+2) ... P(t2)`; identity when empty.
pub fn compound<'a>(n_states: usize, series: impl IntoIterator<Item = &'a Array2<f64>>) -> Array2<f64> {
    series.into_iter().fold(Array2::eye(n_states), |acc, m| acc.dot(m))
}

/// Compounds the one-step matrices of consecutive rows of edge
/// probabilities; the flag reports whether any row was renormalised.
pub fn compound_q_rows(
    space: &StateSpace,
    q: ArrayView2<'_, f64>,
    method: TransformMethod,
) -> Result<(Array2<f64>, bool)> {
    let mut acc = Array2::eye(space.n_states());
    let mut flagged = false;
    for row in q.outer_iter() {
        let (m, f) = one_step_matrix(space, &row.to_vec(), method)?;
        flagged |= f;
        acc = acc.dot(&m);
    }
    Ok((acc, flagged))
}

/// `onehot(start) · compounded`.
pub fn state_distribution(start: usize, compounded: &Array2<f64>) -> Result<Array1<f64>> {
    if start >= compounded.nrows() {
        return Err(Error::InvalidState { id: String::new(), t: 0, state: start });
    }
    Ok(compounded.row(start).to_owned())
}
