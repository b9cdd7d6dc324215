//! One model per permissible edge, and multi-step state predictions from them.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_transition_with, FitConfig, TransitionModel};
use crate::design::{woe_encode, DesignSpec, Encoding, WoeMap};
use crate::error::{Error, Result};
use crate::frame::{Frame, RowRef};
use crate::metrics::Evaluation;
use crate::panel::{extract_transition_dataset_with, CompetingExits, Edge, Panel, StateSpace};
use crate::transitions::{compound_q_rows, TransformMethod};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BundleOptions {
    pub competing: CompetingExits,
    /// Fit WOE maps on each edge's own target instead of sharing the (0,1) maps.
    pub per_edge_woe: bool,
    /// Per-edge configuration overrides keyed like `"0->1"`.
    pub edge_configs: BTreeMap<String, FitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub space: StateSpace,
    pub competing: CompetingExits,
    pub models: Vec<TransitionModel>,
}

/// Predicted distribution of one subject at `t2` given its state at `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanPrediction {
    pub subject: usize,
    pub start: usize,
    pub probs: Array1<f64>,
}

/// Shared WOE maps fitted on the first edge's target for every WOE column.
fn shared_woe_maps(
    panel: &Panel,
    spec: &DesignSpec,
    edge: Edge,
    competing: CompetingExits,
) -> Result<BTreeMap<String, WoeMap>> {
    let mut out = BTreeMap::new();
    let woe_cols: Vec<&String> =
        spec.linear_terms.iter().chain(&spec.network_inputs).filter(|c| spec.encoding(c) == Encoding::Woe).collect();
    if woe_cols.is_empty() {
        return Ok(out);
    }
    let ds = extract_transition_dataset_with(panel, edge, competing)?;
    ds.ensure_non_degenerate()?;
    let frame = Frame::from_dataset(&ds);
    let labels = ds.labels();
    for col in woe_cols {
        if out.contains_key(col) || !frame.is_categorical(col)? {
            continue;
        }
        let (map, _) = woe_encode(frame.labels(col)?, &labels, spec.woe_smoothing)?;
        out.insert(col.clone(), map);
    }
    Ok(out)
}

/// Fits every permissible edge of the panel's state space.
pub fn fit_all(panel: &Panel, spec: &DesignSpec, cfg: &FitConfig, options: &BundleOptions) -> Result<ModelBundle> {
    let space = panel.space().clone();
    let edges = space.edges().to_vec();
    let shared = if options.per_edge_woe || edges.is_empty() {
        None
    } else {
        let first = if space.is_edge(Edge(0, 1)) { Edge(0, 1) } else { edges[0] };
        Some(shared_woe_maps(panel, spec, first, options.competing)?)
    };
    let models: Vec<Result<TransitionModel>> = edges
        .par_iter()
        .map(|&edge| {
            let ecfg = options.edge_configs.get(&edge.to_string()).unwrap_or(cfg);
            let ds = extract_transition_dataset_with(panel, edge, options.competing)?;
            log::info!("fitting edge {edge} on {} rows ({} events)", ds.len(), ds.positives());
            fit_transition_with(&ds, spec, ecfg, shared.as_ref()).inspect_err(|e| log::error!("edge {edge}: {e}"))
        })
        .collect();
    let models = models.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ModelBundle { format_version: BUNDLE_FORMAT_VERSION, space, competing: options.competing, models })
}

impl ModelBundle {
    pub fn model(&self, edge: Edge) -> Option<&TransitionModel> {
        self.models.iter().find(|m| m.edge == edge)
    }

    /// Restores network caches after deserialisation.
    pub fn hydrate(&mut self) -> Result<()> {
        self.models.iter_mut().try_for_each(|m| m.hydrate())
    }

    /// Edge probabilities for each row, columns in `space.edges()` order.
    pub fn predict_q_rows(&self, panel: &Panel, rows: &[RowRef]) -> Result<Array2<f64>> {
        let frame = Frame::from_panel(panel, rows);
        self.predict_q_frame(&frame)
    }

    pub fn predict_q_frame(&self, frame: &Frame) -> Result<Array2<f64>> {
        let edges = self.space.edges();
        let mut q = Array2::zeros((frame.n_rows(), edges.len()));
        for (j, &edge) in edges.iter().enumerate() {
            let model = self.model(edge).ok_or(Error::UnknownEdge { from: edge.0, to: edge.1 })?;
            q.column_mut(j).assign(&Array1::from(model.predict_q(frame)?));
        }
        Ok(q)
    }

    /// Distribution at `t2` for every subject observed at `t1` (absorbed
    /// subjects count as observed); others are skipped. Covariates past a subject's last observation are carried forward.
    pub fn predict_span(
        &self,
        panel: &Panel,
        t1: u32,
        t2: u32,
        method: TransformMethod,
    ) -> Result<Vec<SpanPrediction>> {
        if t1 >= t2 {
            return Err(Error::InvalidRange { lo: t1 as f64, hi: t2 as f64 });
        }
        let horizon = (t2 - t1) as usize;
        let mut starts = Vec::new();
        let mut rows = Vec::new();
        let mut skipped = 0usize;
        for i in 0..panel.len() {
            match panel.state_at(i, t1) {
                Some(z) => {
                    starts.push((i, z));
                    rows.extend((t1 + 1..=t2).map(|t| RowRef { subject: i, t }));
                }
                None => skipped += 1,
            }
        }
        if skipped > 0 {
            log::info!("{skipped} subjects not observed at t={t1} skipped");
        }
        let q = self.predict_q_rows(panel, &rows)?;
        let mut flagged = 0usize;
        let mut out = Vec::with_capacity(starts.len());
        for (n, &(subject, start)) in starts.iter().enumerate() {
            let (m, f) = compound_q_rows(&self.space, q.slice(s![n * horizon..(n + 1) * horizon, ..]), method)?;
            flagged += usize::from(f);
            out.push(SpanPrediction { subject, start, probs: m.row(start).to_owned() });
        }
        if flagged > 0 {
            log::warn!("{flagged} subjects had one-step matrices that needed renormalising");
        }
        Ok(out)
    }

    /// Predictions for `(t1, t2)` paired with the states observed at `t2`.
    /// Subjects not observed at both ends are left out.
    pub fn span_evaluation(&self, panel: &Panel, t1: u32, t2: u32, method: TransformMethod) -> Result<Evaluation> {
        let preds = self.predict_span(panel, t1, t2, method)?;
        let kept: Vec<(&SpanPrediction, usize)> =
            preds.iter().filter_map(|p| panel.state_at(p.subject, t2).map(|z| (p, z))).collect();
        if kept.is_empty() {
            return Err(Error::EmptySpan { t1, t2 });
        }
        let k = self.space.n_states();
        let probs = Array2::from_shape_fn((kept.len(), k), |(n, j)| kept[n].0.probs[j]);
        let observed = kept.iter().map(|(_, z)| *z).collect();
        let start = kept.iter().map(|(p, _)| p.start).collect();
        Evaluation::new(probs, observed, start)
    }
}
