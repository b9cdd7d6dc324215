//! Start-state-conditional cut-point classification.

use std::collections::BTreeMap;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::Evaluation;
use crate::error::{Error, Result};

/// Cut-points are kept inside `[CUTPOINT_EPS, 1 - CUTPOINT_EPS]`.
pub const CUTPOINT_EPS: f64 = 1e-4;
const GRID_POINTS: usize = 25;
const SWEEPS: usize = 3;

/// One cut-point vector per start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CutpointRule {
    pub cutpoints: BTreeMap<usize, Vec<f64>>,
}

impl CutpointRule {
    pub fn uniform(start_states: &[usize], n_states: usize) -> Self {
        let c = vec![1.0 / n_states as f64; n_states];
        Self { cutpoints: start_states.iter().map(|&k| (k, c.clone())).collect() }
    }
}

/// Class with the largest relative excess `(p - c) / c`; ties go to the
/// lowest index.
pub fn predict_class(probs: ArrayView1<'_, f64>, cut: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (j, (&p, &c)) in probs.iter().zip(cut).enumerate() {
        let score = (p - c) / c;
        if score > best_score {
            best = j;
            best_score = score;
        }
    }
    best
}

fn correct(eval: &Evaluation, idx: &[usize], cut: &[f64]) -> usize {
    idx.iter().filter(|&&i| predict_class(eval.probs().row(i), cut) == eval.observed()[i]).count()
}

fn log_grid() -> Vec<f64> {
    let (lo, hi) = (CUTPOINT_EPS.ln(), (1.0 - CUTPOINT_EPS).ln());
    (0..GRID_POINTS).map(|g| (lo + (hi - lo) * g as f64 / (GRID_POINTS - 1) as f64).exp()).collect()
}

/// Coordinate ascent over a log-spaced grid per class, started at the
/// class prevalences among subjects starting in each state. The returned
/// rule is never less accurate on `calib` than the plain argmax rule.
pub fn calibrate_cutpoints(calib: &Evaluation, start_states: &[usize]) -> Result<CutpointRule> {
    let k = calib.n_states();
    let grid = log_grid();
    let mut rule = CutpointRule::default();
    for &state in start_states {
        let idx: Vec<usize> = (0..calib.len()).filter(|&i| calib.start()[i] == state).collect();
        if idx.is_empty() {
            return Err(Error::EmptyStartState(state));
        }
        let mut cut = vec![0.0; k];
        for &i in &idx {
            cut[calib.observed()[i]] += 1.0;
        }
        cut.iter_mut().for_each(|c| *c = (*c / idx.len() as f64).clamp(CUTPOINT_EPS, 1.0 - CUTPOINT_EPS));
        let mut score = correct(calib, &idx, &cut);
        for _ in 0..SWEEPS {
            let before = score;
            for j in 0..k {
                for &g in &grid {
                    let kept = cut[j];
                    cut[j] = g;
                    let s = correct(calib, &idx, &cut);
                    if s > score {
                        score = s;
                    } else {
                        cut[j] = kept;
                    }
                }
            }
            if score == before {
                break;
            }
        }
        let uniform = vec![1.0 / k as f64; k];
        if correct(calib, &idx, &uniform) > score {
            cut = uniform;
        }
        rule.cutpoints.insert(state, cut);
    }
    Ok(rule)
}

/// Share of subjects whose cut-point class equals the observed end state.
pub fn cutpoint_accuracy(eval: &Evaluation, rule: &CutpointRule) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut hits = 0usize;
    for i in 0..eval.len() {
        let start = eval.start()[i];
        let cut = rule.cutpoints.get(&start).ok_or(Error::MissingStartState(start))?;
        if cut.len() != eval.n_states() {
            return Err(Error::ShapeMismatch(format!("cut-point vector for state {start} has {} entries", cut.len())));
        }
        hits += usize::from(predict_class(eval.probs().row(i), cut) == eval.observed()[i]);
    }
    Ok(hits as f64 / eval.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn perfect_predictions_score_one() {
        let p = array![[0.9, 0.1], [0.2, 0.8], [0.7, 0.3]];
        let eval = Evaluation::new(p, vec![0, 1, 0], vec![0; 3]).unwrap();
        let uniform = CutpointRule::uniform(&[0], 2);
        assert_eq!(cutpoint_accuracy(&eval, &uniform).unwrap(), 1.0);
        let rule = calibrate_cutpoints(&eval, &[0]).unwrap();
        assert_eq!(cutpoint_accuracy(&eval, &rule).unwrap(), 1.0);
        let c = &rule.cutpoints[&0];
        assert!(c.iter().all(|&v| (CUTPOINT_EPS..=1.0 - CUTPOINT_EPS).contains(&v)));
    }

    #[test]
    fn ties_pick_lowest_class() {
        let c = [0.2, 0.3, 0.5];
        assert_eq!(predict_class(ndarray::ArrayView1::from(&c), &c), 0);
        let eval = Evaluation::new(Array2::from_shape_fn((4, 3), |(_, j)| c[j]), vec![0, 1, 2, 0], vec![1; 4]).unwrap();
        let rule = CutpointRule { cutpoints: [(1, c.to_vec())].into() };
        assert_eq!(cutpoint_accuracy(&eval, &rule).unwrap(), 0.5);
    }

    #[test]
    fn hand_fixture() {
        let p = array![[0.6, 0.3, 0.1], [0.5, 0.4, 0.1], [0.2, 0.2, 0.6], [0.7, 0.1, 0.2], [0.4, 0.35, 0.25]];
        // scores (p-c)/c with c = (0.5, 0.25, 0.25):
        // row 0: 0.2, 0.2, -0.6 -> 0 ; row 1: 0.0, 0.6, -0.6 -> 1 ; row 2: -0.6, -0.2, 1.4 -> 2
        // row 3: 0.4, -0.6, -0.2 -> 0 ; row 4: -0.2, 0.4, 0.0 -> 1
        let eval = Evaluation::new(p, vec![1, 1, 2, 0, 0], vec![0, 0, 0, 1, 1]).unwrap();
        let c = vec![0.5, 0.25, 0.25];
        let rule = CutpointRule { cutpoints: [(0, c.clone()), (1, c)].into() };
        assert_eq!(cutpoint_accuracy(&eval, &rule).unwrap(), 3.0 / 5.0);
        let partial = CutpointRule { cutpoints: [(0, vec![0.5, 0.25, 0.25])].into() };
        assert_eq!(cutpoint_accuracy(&eval, &partial), Err(Error::MissingStartState(1)));
    }

    #[test]
    fn rare_class_rescued_by_small_cut() {
        // two rare positives with modest class-1 probability that plain argmax misses
        let p1 = [0.3, 0.35, 0.05, 0.1, 0.02, 0.08, 0.12, 0.04, 0.06, 0.15];
        let observed = vec![1, 1, 0, 0, 0, 0, 0, 0, 0, 0];
        let p = Array2::from_shape_fn((10, 2), |(i, j)| if j == 1 { p1[i] } else { 1.0 - p1[i] });
        let eval = Evaluation::new(p, observed, vec![0; 10]).unwrap();
        assert_eq!(cutpoint_accuracy(&eval, &CutpointRule::uniform(&[0], 2)).unwrap(), 0.8);
        // exhaustive oracle over a fine two-dimensional grid
        let mut oracle = 0.0f64;
        for a in 1..200 {
            for b in 1..200 {
                let c = [a as f64 / 200.0, b as f64 / 200.0];
                let rule = CutpointRule { cutpoints: [(0, c.to_vec())].into() };
                oracle = oracle.max(cutpoint_accuracy(&eval, &rule).unwrap());
            }
        }
        assert_eq!(oracle, 1.0);
        let rule = calibrate_cutpoints(&eval, &[0]).unwrap();
        assert!(cutpoint_accuracy(&eval, &rule).unwrap() >= 0.9);
    }

    #[test]
    fn missing_calibration_state() {
        let eval = Evaluation::new(array![[0.5, 0.5]], vec![0], vec![0]).unwrap();
        assert_eq!(calibrate_cutpoints(&eval, &[0, 2]), Err(Error::EmptyStartState(2)));
    }
}
