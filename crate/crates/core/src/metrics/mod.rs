//! Discrimination, calibration and accuracy metrics for predicted end-state
//! distributions, plus error summaries for transform comparisons.

mod cutpoint;

pub use cutpoint::{calibrate_cutpoints, cutpoint_accuracy, predict_class, CutpointRule, CUTPOINT_EPS};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicted distributions for one evaluation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    probs: Array2<f64>,
    observed: Vec<usize>,
    start: Vec<usize>,
}

impl Evaluation {
    /// `probs` is subjects × states; rows must sum to one within 1e-9.
    pub fn new(probs: Array2<f64>, observed: Vec<usize>, start: Vec<usize>) -> Result<Self> {
        let (n, k) = probs.dim();
        if observed.len() != n || start.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} prediction rows, {} observed states, {} start states",
                observed.len(),
                start.len()
            )));
        }
        if k < 2 {
            return Err(Error::ShapeMismatch(format!("{k} prediction columns")));
        }
        for (i, row) in probs.outer_iter().enumerate() {
            let total: f64 = row.sum();
            if !row.iter().all(|p| p.is_finite() && *p >= -1e-12) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::ShapeMismatch(format!("prediction row {i} is not a distribution (sum {total})")));
            }
        }
        if let Some(&bad) = observed.iter().chain(&start).find(|&&s| s >= k) {
            return Err(Error::ShapeMismatch(format!("state {bad} outside 0..{k}")));
        }
        Ok(Self { probs, observed, start })
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn start(&self) -> &[usize] {
        &self.start
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.probs.ncols()
    }

    /// Observed class counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_states()];
        for &z in &self.observed {
            counts[z] += 1;
        }
        counts
    }

    pub fn subset(&self, idx: &[usize]) -> Evaluation {
        Evaluation {
            probs: self.probs.select(ndarray::Axis(0), idx),
            observed: idx.iter().map(|&i| self.observed[i]).collect(),
            start: idx.iter().map(|&i| self.start[i]).collect(),
        }
    }
}

/// Mann–Whitney AUC; tied scores count one half.
pub fn binary_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassOnly);
    }
    // doubled win count keeps the half credit for ties integral
    let mut twice_wins: u128 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_wins += 2 * u128::from(pos) * u128::from(neg_below) + u128::from(pos) * u128::from(neg);
        neg_below += neg;
        i = j;
    }
    Ok(twice_wins as f64 / (2 * u128::from(n_pos) * u128::from(n_neg)) as f64)
}

fn column(eval: &Evaluation, j: usize) -> ArrayView1<'_, f64> {
    eval.probs.column(j)
}

/// Average pairwise AUC over the classes present in the window.
pub fn multiclass_auc(eval: &Evaluation) -> Result<f64> {
    let present: Vec<usize> = eval.class_counts().iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, _)| j).collect();
    if present.len() < 2 {
        return Err(Error::TooFewClasses(present.len()));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &r) in present.iter().enumerate() {
        for &s in &present[a + 1..] {
            let idx: Vec<usize> = (0..eval.len()).filter(|&i| eval.observed[i] == r || eval.observed[i] == s).collect();
            let labels_r: Vec<bool> = idx.iter().map(|&i| eval.observed[i] == r).collect();
            let labels_s: Vec<bool> = labels_r.iter().map(|l| !l).collect();
            let score_r: Vec<f64> = idx.iter().map(|&i| column(eval, r)[i]).collect();
            let score_s: Vec<f64> = idx.iter().map(|&i| column(eval, s)[i]).collect();
            total += (binary_auc(&score_r, &labels_r)? + binary_auc(&score_s, &labels_s)?) / 2.0;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Prevalence-weighted one-vs-rest AUC; classes lacking positives or
/// negatives are dropped and the weights renormalised.
pub fn one_vs_all_auc(eval: &Evaluation) -> Result<f64> {
    let counts = eval.class_counts();
    let n = eval.len();
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 || c == n {
            if c == n && n > 0 {
                log::debug!("class {j} holds every subject; excluded from one-vs-all AUC");
            }
            continue;
        }
        let labels: Vec<bool> = eval.observed.iter().map(|&z| z == j).collect();
        let scores = column(eval, j).to_vec();
        let w = c as f64 / n as f64;
        weighted += w * binary_auc(&scores, &labels)?;
        weight += w;
    }
    if weight == 0.0 {
        return Err(Error::TooFewClasses(counts.iter().filter(|&&c| c > 0).count()));
    }
    Ok(weighted / weight)
}

/// Mean squared error per subject and class against one-hot outcomes.
pub fn brier_multiclass(eval: &Evaluation) -> f64 {
    let (n, k) = eval.probs.dim();
    let mut total = 0.0;
    for (row, &z) in eval.probs.outer_iter().zip(&eval.observed) {
        for (j, &p) in row.iter().enumerate() {
            let y = if j == z { 1.0 } else { 0.0 };
            total += (p - y) * (p - y);
        }
    }
    total / (n * k) as f64
}

/// Expected calibration error with `bins` equal-width bins per class,
/// averaged over classes.
pub fn ece(eval: &Evaluation, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::InvalidConfig("ECE needs at least one bin".into()));
    }
    let (n, k) = eval.probs.dim();
    if n == 0 {
        return Err(Error::EmptyPanel);
    }
    let mut total = 0.0;
    for j in 0..k {
        let mut count = vec![0usize; bins];
        let mut p_sum = vec![0.0; bins];
        let mut y_sum = vec![0.0; bins];
        for (i, &p) in column(eval, j).iter().enumerate() {
            let b = ((p * bins as f64).floor().max(0.0) as usize).min(bins - 1);
            count[b] += 1;
            p_sum[b] += p;
            if eval.observed[i] == j {
                y_sum[b] += 1.0;
            }
        }
        total += (0..bins).filter(|&b| count[b] > 0).map(|b| (p_sum[b] - y_sum[b]).abs() / n as f64).sum::<f64>();
    }
    Ok(total / k as f64)
}

/// One row of the evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub multi_auc: Option<f64>,
    pub auc_one_vs_all: Option<f64>,
    pub brier: f64,
    pub ece: f64,
    pub accuracy: Option<f64>,
    pub notes: Vec<String>,
}

/// All window metrics; AUCs that cannot be formed are reported as `None`
/// with a note instead of failing the whole evaluation.
pub fn metric_report(eval: &Evaluation, rule: Option<&CutpointRule>, bins: usize) -> Result<MetricReport> {
    let mut notes = Vec::new();
    let absent: Vec<usize> = eval.class_counts().iter().enumerate().filter(|(_, &c)| c == 0).map(|(j, _)| j).collect();
    if !absent.is_empty() {
        notes.push(format!("classes {absent:?} absent from the window"));
    }
    let multi_auc = match multiclass_auc(eval) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("multiclass AUC: {e}"));
            None
        }
    };
    let auc_one_vs_all = match one_vs_all_auc(eval) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("one-vs-all AUC: {e}"));
            None
        }
    };
    let accuracy = rule.map(|r| cutpoint_accuracy(eval, r)).transpose()?;
    Ok(MetricReport {
        n: eval.len(),
        multi_auc,
        auc_one_vs_all,
        brier: brier_multiclass(eval),
        ece: ece(eval, bins)?,
        accuracy,
        notes,
    })
}

/// Per-target-state squared and absolute errors of estimated against true
/// distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformErrors {
    pub mse: Vec<f64>,
    pub mae: Vec<f64>,
}

pub fn transform_error_report(truth: &Array2<f64>, estimate: &Array2<f64>) -> Result<TransformErrors> {
    if truth.dim() != estimate.dim() {
        return Err(Error::ShapeMismatch(format!("truth {:?} vs estimate {:?}", truth.dim(), estimate.dim())));
    }
    let n = truth.nrows();
    if n == 0 {
        return Err(Error::EmptyPanel);
    }
    let diff = estimate - truth;
    let mse = diff.columns().into_iter().map(|c| c.dot(&c) / n as f64).collect();
    let mae = diff.columns().into_iter().map(|c| c.iter().map(|d| d.abs()).sum::<f64>() / n as f64).collect();
    Ok(TransformErrors { mse, mae })
}

/// Mean and sample standard deviation of per-state errors over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicates: usize,
    pub mse_mean: Vec<f64>,
    pub mse_sd: Vec<f64>,
    pub mae_mean: Vec<f64>,
    pub mae_sd: Vec<f64>,
}

pub fn summarise_replicates(reports: &[TransformErrors]) -> Result<ReplicateSummary> {
    let first = reports.first().ok_or(Error::EmptyPanel)?;
    let k = first.mse.len();
    if reports.iter().any(|r| r.mse.len() != k || r.mae.len() != k) {
        return Err(Error::ShapeMismatch("replicates report different state counts".into()));
    }
    let stats = |get: &dyn Fn(&TransformErrors) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        let r = reports.len() as f64;
        let mean: Vec<f64> = (0..k).map(|j| reports.iter().map(|x| get(x)[j]).sum::<f64>() / r).collect();
        let sd = (0..k)
            .map(|j| {
                if reports.len() < 2 {
                    return 0.0;
                }
                let ss: f64 = reports.iter().map(|x| (get(x)[j] - mean[j]).powi(2)).sum();
                (ss / (r - 1.0)).sqrt()
            })
            .collect();
        (mean, sd)
    };
    let (mse_mean, mse_sd) = stats(&|x| &x.mse);
    let (mae_mean, mae_sd) = stats(&|x| &x.mae);
    Ok(ReplicateSummary { replicates: reports.len(), mse_mean, mse_sd, mae_mean, mae_sd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn binary_auc_examples() {
        let auc = binary_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
        assert_eq!(auc, brute_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]));
        assert_eq!(binary_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(binary_auc(&[0.3; 5], &[true, false, true, false, false]).unwrap(), 0.5);
        assert_eq!(binary_auc(&[0.3, 0.4], &[true, true]), Err(Error::OneClassOnly));
    }

    #[test]
    fn multiclass_two_class_reduces_to_binary() {
        let p = array![[0.8, 0.2], [0.4, 0.6], [0.55, 0.45], [0.1, 0.9], [0.5, 0.5]];
        let observed = vec![0, 1, 1, 1, 0];
        let eval = Evaluation::new(p.clone(), observed.clone(), vec![0; 5]).unwrap();
        let labels: Vec<bool> = observed.iter().map(|&z| z == 1).collect();
        let direct = binary_auc(&p.column(1).to_vec(), &labels).unwrap();
        assert!((multiclass_auc(&eval).unwrap() - direct).abs() < 1e-15);
        assert!((one_vs_all_auc(&eval).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn absent_class_is_skipped() {
        let p = array![[0.7, 0.2, 0.1], [0.2, 0.7, 0.1], [0.6, 0.3, 0.1]];
        let eval = Evaluation::new(p, vec![0, 1, 0], vec![0; 3]).unwrap();
        assert_eq!(multiclass_auc(&eval).unwrap(), 1.0);
        let single = Evaluation::new(array![[0.5, 0.5]], vec![1], vec![0]).unwrap();
        assert_eq!(multiclass_auc(&single), Err(Error::TooFewClasses(1)));
    }

    #[test]
    fn weighted_one_vs_all() {
        // class 0 perfectly ranked, class 1 (2%) all tied
        let n = 100;
        let mut p = Array2::zeros((n, 2));
        let mut observed = vec![0; n];
        for i in 0..n {
            if i < 2 {
                observed[i] = 1;
            }
            let score0 = if i < 2 { 0.0 } else { 1.0 };
            p[[i, 0]] = score0;
            p[[i, 1]] = 1.0 - score0;
        }
        let eval = Evaluation::new(p, observed, vec![0; n]).unwrap();
        assert_eq!(one_vs_all_auc(&eval).unwrap(), 1.0);
        let eval = Evaluation::new(Array2::from_elem((n, 2), 0.5), eval.observed().to_vec(), vec![0; n]).unwrap();
        assert_eq!(one_vs_all_auc(&eval).unwrap(), 0.5);
    }

    #[test]
    fn brier_values() {
        let perfect =
            Evaluation::new(array![[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]], vec![0, 2], vec![0, 0]).unwrap();
        assert_eq!(brier_multiclass(&perfect), 0.0);
        let uniform = Evaluation::new(Array2::from_elem((3, 4), 0.25), vec![0, 3, 1], vec![0; 3]).unwrap();
        assert!((brier_multiclass(&uniform) - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn class_frequency_minimises_constant_brier() {
        let observed = vec![0, 0, 1, 2, 0, 1, 0, 0, 2, 0];
        let freq = [0.6, 0.2, 0.2];
        let score = |c: [f64; 3]| {
            let p = Array2::from_shape_fn((10, 3), |(_, j)| c[j]);
            brier_multiclass(&Evaluation::new(p, observed.clone(), vec![0; 10]).unwrap())
        };
        let best = score(freq);
        for d in [0.05, -0.05, 0.1] {
            assert!(score([0.6 + d, 0.2 - d, 0.2]) > best);
            assert!(score([0.6, 0.2 + d, 0.2 - d]) > best);
        }
    }

    #[test]
    fn ece_examples() {
        let half = Evaluation::new(Array2::from_elem((4, 2), 0.5), vec![0, 1, 0, 1], vec![0; 4]).unwrap();
        assert_eq!(ece(&half, 10).unwrap(), 0.0);
        // class 1 predicted 0.9 and never observed, class 0 predicted 0.1 and always observed
        let p = Array2::from_shape_fn((5, 2), |(_, j)| if j == 1 { 0.9 } else { 0.1 });
        let eval = Evaluation::new(p, vec![0; 5], vec![0; 5]).unwrap();
        assert!((ece(&eval, 10).unwrap() - 0.9).abs() < 1e-12);
        // hand computation with two bins on four points
        let p = array![[0.2, 0.8], [0.4, 0.6], [0.7, 0.3], [0.9, 0.1]];
        let eval = Evaluation::new(p, vec![1, 0, 0, 0], vec![0; 4]).unwrap();
        // class 0: bin [0,.5) holds 0.2,0.4 (one hit) -> |0.6-1|/4; bin [.5,1] holds 0.7,0.9 (two hits) -> |1.6-2|/4
        // class 1 mirrors class 0
        assert!((ece(&eval, 2).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_bin_ece_is_mean_gap() {
        let p = array![[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8], [0.3, 0.3, 0.4]];
        let eval = Evaluation::new(p.clone(), vec![0, 0, 2, 1], vec![0; 4]).unwrap();
        let prevalence = [0.5, 0.25, 0.25];
        let expected: f64 = (0..3).map(|j| (p.column(j).mean().unwrap() - prevalence[j]).abs()).sum::<f64>() / 3.0;
        assert!((ece(&eval, 1).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn transform_errors() {
        let truth = array![[0.7, 0.2, 0.05, 0.05], [0.5, 0.3, 0.1, 0.1]];
        let zero = transform_error_report(&truth, &truth).unwrap();
        assert!(zero.mse.iter().chain(&zero.mae).all(|&v| v == 0.0));
        let mut est = truth.clone();
        est.column_mut(3).mapv_inplace(|v| v + 0.01);
        let r = transform_error_report(&truth, &est).unwrap();
        assert!((r.mse[3] - 1e-4).abs() < 1e-15);
        assert!((r.mae[3] - 0.01).abs() < 1e-15);
        assert_eq!(r.mse[0], 0.0);
        assert!(transform_error_report(&truth, &est.slice(ndarray::s![..1, ..]).to_owned()).is_err());
        let s = summarise_replicates(&[r.clone(), zero]).unwrap();
        assert!((s.mae_mean[3] - 0.005).abs() < 1e-15);
        assert!((s.mae_sd[3] - 0.01 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn evaluation_rejects_bad_rows() {
        assert!(Evaluation::new(array![[0.5, 0.4]], vec![0], vec![0]).is_err());
        assert!(Evaluation::new(array![[0.5, 0.5]], vec![2], vec![0]).is_err());
    }
}
