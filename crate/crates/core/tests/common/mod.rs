//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod gradcheck;

use ndarray::{Array1, Array2};

/// Competing one-step probabilities by odds normalisation: each exit keeps
/// its odds `q / (1 - q)` relative to staying. Returns `(stay, exits)`.
pub fn odds_normalise(qs: &[f64]) -> (f64, Vec<f64>) {
    let odds: Vec<f64> = qs.iter().map(|q| q / (1.0 - q)).collect();
    let denom = 1.0 + odds.iter().sum::<f64>();
    (1.0 / denom, odds.iter().map(|o| o / denom).collect())
}

/// `P[i, j]` as the sum over every state sequence of length `mats.len()`
/// from `i` to `j` of the product of its one-step probabilities.
pub fn path_enumeration(mats: &[Array2<f64>]) -> Array2<f64> {
    let k = mats.first().map_or(0, |m| m.nrows());
    let steps = mats.len();
    let mut out = Array2::zeros((k, k));
    let total = k.pow(steps as u32);
    for from in 0..k {
        for code in 0..total {
            let mut prob = 1.0;
            let mut state = from;
            let mut c = code;
            for m in mats {
                let next = c % k;
                c /= k;
                prob *= m[[state, next]];
                state = next;
            }
            out[[from, state]] += prob;
        }
    }
    out
}

/// Pairwise-count AUC; ties score one half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice = 0u64;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                twice += 2;
            } else if scores[i] == scores[j] {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * pos * neg) as f64
}

/// Hand and Till's M: mean over class pairs of `(A(r|s) + A(s|r)) / 2`,
/// where `A(r|s)` ranks class-`r` probabilities among subjects in `r` or `s`.
pub fn brute_hand_till(probs: &Array2<f64>, observed: &[usize]) -> f64 {
    let k = probs.ncols();
    let present: Vec<usize> = (0..k).filter(|c| observed.contains(c)).collect();
    let mut total = 0.0;
    let mut pairs = 0;
    for (a, &r) in present.iter().enumerate() {
        for &s in &present[a + 1..] {
            let rows: Vec<usize> = (0..observed.len()).filter(|&i| observed[i] == r || observed[i] == s).collect();
            let a_rs = brute_auc(
                &rows.iter().map(|&i| probs[[i, r]]).collect::<Vec<_>>(),
                &rows.iter().map(|&i| observed[i] == r).collect::<Vec<_>>(),
            );
            let a_sr = brute_auc(
                &rows.iter().map(|&i| probs[[i, s]]).collect::<Vec<_>>(),
                &rows.iter().map(|&i| observed[i] == s).collect::<Vec<_>>(),
            );
            total += (a_rs + a_sr) / 2.0;
            pairs += 1;
        }
    }
    total / pairs as f64
}

pub fn brute_brier(probs: &Array2<f64>, observed: &[usize]) -> f64 {
    let (n, k) = probs.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..k {
            let y = f64::from(u8::from(observed[i] == j));
            sum += (probs[[i, j]] - y).powi(2);
        }
    }
    sum / (n * k) as f64
}

/// Class-averaged ECE over bins `[b/B, (b+1)/B)`, the last bin closed.
pub fn brute_ece(probs: &Array2<f64>, observed: &[usize], bins: usize) -> f64 {
    let (n, k) = probs.dim();
    let mut total = 0.0;
    for j in 0..k {
        for b in 0..bins {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            let members: Vec<usize> =
                (0..n).filter(|&i| probs[[i, j]] >= lo && (probs[[i, j]] < hi || b == bins - 1)).collect();
            if members.is_empty() {
                continue;
            }
            let conf: f64 = members.iter().map(|&i| probs[[i, j]]).sum::<f64>() / members.len() as f64;
            let freq = members.iter().filter(|&&i| observed[i] == j).count() as f64 / members.len() as f64;
            total += members.len() as f64 / n as f64 * (conf - freq).abs();
        }
    }
    total / k as f64
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs())).unwrap();
        if piv != col {
            for c in 0..n {
                a.swap([col, c], [piv, c]);
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            for c in col..n {
                a[[r, c]] -= f * a[[col, c]];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = Array1::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[[r, c]] * x[c]).sum();
        x[r] = (b[r] - s) / a[[r, r]];
    }
    x
}

/// Unpenalised logistic regression by plain Newton iterations from zero.
pub fn newton_logit(x: &Array2<f64>, y: &[f64]) -> Array1<f64> {
    let (n, p) = x.dim();
    let mut beta = Array1::<f64>::zeros(p);
    for _ in 0..200 {
        let mut grad = Array1::<f64>::zeros(p);
        let mut hess = Array2::<f64>::zeros((p, p));
        for i in 0..n {
            let eta: f64 = (0..p).map(|j| x[[i, j]] * beta[j]).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += x[[i, a]] * (y[i] - mu);
                for b in 0..p {
                    hess[[a, b]] += w * x[[i, a]] * x[[i, b]];
                }
            }
        }
        let step = gauss_solve(hess, grad);
        beta += &step;
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
    }
    beta
}
