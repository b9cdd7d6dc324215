mod common;

use common::{brute_auc, brute_brier, brute_ece, brute_hand_till};
use msm_core::metrics::{binary_auc, brier_multiclass, ece, multiclass_auc, Evaluation};
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rows on the simplex with a coarse grid option to force tied scores.
fn fixture(seed: u64, n: usize, k: usize, coarse: bool) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs = Array2::from_shape_fn((n, k), |_| {
        let v: f64 = rng.random_range(0.01..1.0);
        if coarse {
            (v * 4.0).ceil()
        } else {
            v
        }
    });
    for mut row in probs.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    let mut observed: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    observed[0] = 0;
    observed[1] = 1;
    (probs, observed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metrics_match_brute_force(seed in any::<u64>(), k in 2usize..=4, coarse in any::<bool>(), bins in 1usize..=15) {
        let (probs, observed) = fixture(seed, 50, k, coarse);
        let labels: Vec<bool> = observed.iter().map(|&z| z == 1).collect();
        let scores: Vec<f64> = probs.column(1).to_vec();
        prop_assert_eq!(binary_auc(&scores, &labels).unwrap(), brute_auc(&scores, &labels));

        let eval = Evaluation::new(probs.clone(), observed.clone(), vec![0; 50]).unwrap();
        prop_assert_eq!(multiclass_auc(&eval).unwrap(), brute_hand_till(&probs, &observed));
        prop_assert!((brier_multiclass(&eval) - brute_brier(&probs, &observed)).abs() < 1e-12);
        prop_assert!((ece(&eval, bins).unwrap() - brute_ece(&probs, &observed, bins)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_rescoring(seed in any::<u64>()) {
        let (probs, observed) = fixture(seed, 50, 2, false);
        let labels: Vec<bool> = observed.iter().map(|&z| z == 1).collect();
        let scores: Vec<f64> = probs.column(1).to_vec();
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp()).collect();
        prop_assert_eq!(binary_auc(&scores, &labels).unwrap(), binary_auc(&squashed, &labels).unwrap());
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let total = binary_auc(&scores, &labels).unwrap() + binary_auc(&scores, &flipped).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn permuted_labels_give_chance_multiclass_auc() {
    let n = 10_000;
    let (probs, mut observed) = fixture(7, n, 4, false);
    observed.shuffle(&mut ChaCha8Rng::seed_from_u64(8));
    let eval = Evaluation::new(probs, observed, vec![0; n]).unwrap();
    let auc = multiclass_auc(&eval).unwrap();
    assert!((auc - 0.5).abs() < 0.05, "{auc}");
}

#[test]
fn perfect_scores_give_unit_auc_and_zero_brier() {
    let observed = vec![0, 1, 2, 1, 0, 2];
    let probs = Array2::from_shape_fn((6, 3), |(i, j)| f64::from(u8::from(observed[i] == j)));
    let eval = Evaluation::new(probs, observed, vec![0; 6]).unwrap();
    assert_eq!(multiclass_auc(&eval).unwrap(), 1.0);
    assert_eq!(brier_multiclass(&eval), 0.0);
    assert_eq!(ece(&eval, 10).unwrap(), 0.0);
}
