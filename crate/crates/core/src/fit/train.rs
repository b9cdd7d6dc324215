//! Minibatch gradient training of the joint structured + network predictor.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use super::objective::objective_and_gradient;
use super::{mean_bce, network_eval, penalised_newton, select_rows, EpochRecord, FitConfig, FitMetadata};
use crate::design::{factorise, ColumnBlock};
use crate::error::{Error, Result};
use crate::linalg::solve_upper;
use crate::neural::{Mlp, Mode, Optimizer};
use crate::rng::{stream, Stream};

pub(crate) struct TrainOutput {
    pub beta: Array1<f64>,
    pub beta_raw: Array1<f64>,
    pub net: Mlp,
    pub metadata: FitMetadata,
}

/// Subject-level split stratified by whether the subject has any event.
/// Returns (train rows, validation rows); validation is empty when the data
/// cannot spare a subject.
pub(crate) fn validation_split(groups: &[usize], labels: &[f64], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut has_event: BTreeMap<usize, bool> = BTreeMap::new();
    for (&g, &y) in groups.iter().zip(labels) {
        *has_event.entry(g).or_insert(false) |= y > 0.5;
    }
    let mut rng = stream(seed, Stream::ValidationSplit);
    let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (&g, &e) in &has_event {
        strata[usize::from(e)].push(g);
    }
    let mut held = Vec::new();
    for stratum in strata.iter_mut() {
        stratum.shuffle(&mut rng);
        let k = (fraction * stratum.len() as f64).round() as usize;
        held.extend(stratum.drain(..k.min(stratum.len())));
    }
    let n_subjects = has_event.len();
    if held.is_empty() && n_subjects >= 2 {
        let big = if strata[0].len() >= strata[1].len() { 0 } else { 1 };
        held.extend(strata[big].pop());
    }
    if held.len() == n_subjects {
        held.pop();
    }
    let held: std::collections::BTreeSet<usize> = held.into_iter().collect();
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (i, g) in groups.iter().enumerate() {
        if held.contains(g) {
            val.push(i);
        } else {
            train.push(i);
        }
    }
    (train, val)
}

fn both_classes(idx: &[usize], labels: &[f64]) -> bool {
    let pos = idx.iter().filter(|&&i| labels[i] > 0.5).count();
    pos > 0 && pos < idx.len()
}

struct Snapshot {
    beta: Array1<f64>,
    net: Mlp,
}

pub(crate) fn train_semi_structured(
    x: &Array2<f64>,
    u: &Array2<f64>,
    labels: &[f64],
    groups: &[usize],
    blocks: &[ColumnBlock],
    penalty: &Array2<f64>,
    cfg: &FitConfig,
) -> Result<TrainOutput> {
    let (mut train_idx, mut val_idx) = validation_split(groups, labels, cfg.validation_fraction, cfg.seed);
    if !both_classes(&train_idx, labels) {
        log::warn!("validation split leaves one label class in training; training on all rows");
        train_idx = (0..labels.len()).collect();
        val_idx.clear();
    }
    let x_tr = select_rows(x, &train_idx);
    let u_tr = select_rows(u, &train_idx);
    let y_tr: Vec<f64> = train_idx.iter().map(|&i| labels[i]).collect();
    let x_val = select_rows(x, &val_idx);
    let u_val = select_rows(u, &val_idx);
    let y_val: Vec<f64> = val_idx.iter().map(|&i| labels[i]).collect();
    let n = y_tr.len();
    let m = x_tr.ncols();

    let qr = factorise(&x_tr, blocks)?;

    let mut beta = if cfg.warm_start {
        penalised_newton(&x_tr, &y_tr, penalty, None, cfg.newton_max_iter, 1e-8)?.beta
    } else {
        Array1::zeros(m)
    };
    let mut net = Mlp::init(cfg.network.mlp(u.ncols()), &mut stream(cfg.seed, Stream::WeightInit))?;
    // a silent output layer makes the starting point the structured fit itself
    net.zero_output_layer();
    let mut sizes = vec![m];
    sizes.extend(net.param_sizes());
    let mut optimizer = Optimizer::new(cfg.optimizer, &sizes, cfg.adam, cfg.lr)?;
    let mut dropout_rng = stream(cfg.seed, Stream::Dropout);
    let mut order_rng = stream(cfg.seed, Stream::BatchOrder);

    let eval_loss = |beta: &Array1<f64>, net: &Mlp, x: &Array2<f64>, u: &Array2<f64>, y: &[f64]| -> Result<f64> {
        let eta = x.dot(beta) + network_eval(net, u)?;
        Ok(mean_bce(&eta, y))
    };

    let initial_loss = eval_loss(&beta, &net, &x_tr, &u_tr, &y_tr)?;
    if !initial_loss.is_finite() {
        return Err(Error::Diverged { epoch: 0, reason: "non-finite initial loss".into() });
    }
    let has_val = !val_idx.is_empty();
    let monitor = |beta: &Array1<f64>, net: &Mlp| -> Result<f64> {
        if has_val {
            eval_loss(beta, net, &x_val, &u_val, &y_val)
        } else {
            eval_loss(beta, net, &x_tr, &u_tr, &y_tr)
        }
    };
    let mut best_loss = monitor(&beta, &net)?;
    let mut best = Snapshot { beta: beta.clone(), net: net.clone() };
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut blowups = 0;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs_run = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = select_rows(&x_tr, batch);
            let ub = select_rows(&u_tr, batch);
            let yb: Vec<f64> = batch.iter().map(|&r| y_tr[r]).collect();
            let g = objective_and_gradient(
                &beta,
                &net,
                xb.view(),
                ub.view(),
                &yb,
                penalty,
                n,
                Mode::Train,
                &mut dropout_rng,
            )?;
            loss_sum += g.nll_sum;
            let mut grads: Vec<&[f64]> = vec![g.beta.as_slice().expect("contiguous")];
            grads.extend(g.net.slices());
            let mut params: Vec<&mut [f64]> = vec![beta.as_slice_mut().expect("contiguous")];
            params.extend(net.param_slices_mut());
            optimizer.step(&mut params, &grads);
        }
        let train_loss = loss_sum / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::Diverged { epoch, reason: "non-finite training loss".into() });
        }
        if train_loss > 10.0 * initial_loss {
            blowups += 1;
            if blowups >= 3 {
                return Err(Error::Diverged {
                    epoch,
                    reason: format!("training loss {train_loss:.4} above ten times the initial {initial_loss:.4}"),
                });
            }
        } else {
            blowups = 0;
        }
        let monitored = monitor(&beta, &net)?;
        if !monitored.is_finite() {
            return Err(Error::Diverged { epoch, reason: "non-finite validation loss".into() });
        }
        let structured_share = if cfg.epoch_diagnostics {
            let out = network_eval(&net, &u_tr)?;
            let coef = qr.q.t().dot(&out);
            let total = out.dot(&out).sqrt();
            Some(if total > 0.0 { coef.dot(&coef).sqrt() / total } else { 0.0 })
        } else {
            None
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss: has_val.then_some(monitored),
            structured_share,
        });
        log::debug!("epoch {epoch}: train {train_loss:.6} monitored {monitored:.6}");
        if monitored < best_loss {
            best_loss = monitored;
            best = Snapshot { beta: beta.clone(), net: net.clone() };
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let Snapshot { beta: beta_raw, net } = best;
    let net_out = network_eval(&net, &u_tr)?;
    let coef = qr.q.t().dot(&net_out);
    let shift = solve_upper(&qr.r, &coef);
    let beta_attr = &beta_raw + &shift;
    let unstructured = &net_out - &qr.q.dot(&coef);
    let structured = x_tr.dot(&beta_attr);

    let e_norm = unstructured.dot(&unstructured).sqrt();
    let orthogonality = if e_norm == 0.0 {
        0.0
    } else {
        x_tr.axis_iter(Axis(1))
            .map(|col| {
                let c_norm = col.dot(&col).sqrt();
                if c_norm == 0.0 {
                    0.0
                } else {
                    col.dot(&unstructured).abs() / (c_norm * e_norm)
                }
            })
            .fold(0.0, f64::max)
    };
    let s_norm = structured.dot(&structured).sqrt();
    let train_loss = mean_bce(&(&structured + &unstructured), &y_tr);
    let validation_loss = if has_val { Some(best_loss) } else { None };

    Ok(TrainOutput {
        beta: beta_attr,
        beta_raw,
        net,
        metadata: FitMetadata {
            seed: cfg.seed,
            n_train: n,
            n_validation: val_idx.len(),
            epochs_run,
            best_epoch,
            train_loss,
            validation_loss,
            converged: stopped_early,
            orthogonality: Some(orthogonality),
            unstructured_ratio: Some(if s_norm > 0.0 { e_norm / s_norm } else { f64::INFINITY }),
            history,
        },
    })
}
