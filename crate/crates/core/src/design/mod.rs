//! Structured design matrices, preprocessing and the orthogonal projector
//! separating structured and unstructured predictor components.

pub mod spline;
pub mod woe;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{thin_qr, ThinQr};

pub use spline::{difference_penalty, spline_basis, CubicBasis, SumToZero};
pub use woe::{woe_encode, WoeMap};

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    OneHot,
    Woe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineTerm {
    pub column: String,
    #[serde(default = "default_basis_dim")]
    pub basis_dim: usize,
    #[serde(default = "default_penalty_order")]
    pub penalty_order: usize,
    /// Fixed basis range; fitted from the training rows when absent.
    #[serde(default)]
    pub range: Option<(f64, f64)>,
}

impl SplineTerm {
    pub fn new(column: impl Into<String>, basis_dim: usize) -> Self {
        Self { column: column.into(), basis_dim, penalty_order: 2, range: None }
    }
}

fn default_basis_dim() -> usize {
    10
}

fn default_penalty_order() -> usize {
    2
}

fn yes() -> bool {
    true
}

fn default_smoothing() -> f64 {
    woe::DEFAULT_SMOOTHING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    #[serde(default = "yes")]
    pub include_intercept: bool,
    #[serde(default)]
    pub linear_terms: Vec<String>,
    #[serde(default)]
    pub spline_terms: Vec<SplineTerm>,
    /// Encoding per categorical column; one-hot when not listed.
    #[serde(default)]
    pub categorical_encodings: BTreeMap<String, Encoding>,
    #[serde(default = "yes")]
    pub standardise: bool,
    /// Covariates fed to the network term.
    #[serde(default)]
    pub network_inputs: Vec<String>,
    #[serde(default = "default_smoothing")]
    pub woe_smoothing: f64,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            include_intercept: true,
            linear_terms: Vec::new(),
            spline_terms: Vec::new(),
            categorical_encodings: BTreeMap::new(),
            standardise: true,
            network_inputs: Vec::new(),
            woe_smoothing: woe::DEFAULT_SMOOTHING,
        }
    }
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        for s in &self.spline_terms {
            if s.basis_dim < 4 {
                return Err(Error::DimTooSmall(s.basis_dim));
            }
            if !(1..=2).contains(&s.penalty_order) {
                return Err(Error::InvalidConfig(format!(
                    "penalty order {} for `{}` must be 1 or 2",
                    s.penalty_order, s.column
                )));
            }
            if self.linear_terms.contains(&s.column) {
                return Err(Error::InvalidConfig(format!("`{}` is both linear and spline", s.column)));
            }
        }
        if !self.include_intercept && self.linear_terms.is_empty() && self.spline_terms.is_empty() {
            return Err(Error::InvalidConfig("design has no columns".into()));
        }
        if !(self.woe_smoothing > 0.0) {
            return Err(Error::InvalidConfig("WOE smoothing must be positive".into()));
        }
        Ok(())
    }

    pub fn encoding(&self, column: &str) -> Encoding {
        self.categorical_encodings.get(column).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Intercept,
    Linear,
    Spline,
}

/// A named contiguous range of design columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBlock {
    pub name: String,
    pub kind: BlockKind,
    pub start: usize,
    pub len: usize,
}

impl ColumnBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardisation {
    pub mean: f64,
    pub sd: f64,
}

impl Standardisation {
    fn fit(x: &[f64]) -> Self {
        let n = x.len().max(1) as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        // a constant column keeps sd = 1 and surfaces as rank deficiency
        Self { mean, sd: if sd > 0.0 { sd } else { 1.0 } }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineParams {
    pub column: String,
    pub basis: CubicBasis,
    pub penalty_order: usize,
    pub constraint: SumToZero,
}

impl SplineParams {
    pub fn n_columns(&self) -> usize {
        self.basis.dim() - 1
    }

    pub fn penalty(&self) -> Array2<f64> {
        self.constraint.constrain_penalty(&difference_penalty(self.basis.dim(), self.penalty_order))
    }

    fn write_row(&self, x: f64, raw: &mut [f64], out: &mut [f64]) {
        self.basis.eval_into(x, raw);
        self.constraint.apply_row(raw, out);
    }

    /// Smooth values `f(x)` for constrained coefficients `gamma`.
    pub fn curve(&self, gamma: &[f64], xs: &[f64]) -> Vec<f64> {
        let full = self.constraint.expand_coefficients(gamma);
        xs.iter().map(|&x| self.basis.eval(x).iter().zip(&full).map(|(b, c)| b * c).sum()).collect()
    }
}

/// Everything learned from the training rows that the predict path replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    /// Design column names in matrix order.
    pub column_names: Vec<String>,
    pub blocks: Vec<ColumnBlock>,
    pub standardisation: BTreeMap<String, Standardisation>,
    pub woe: BTreeMap<String, WoeMap>,
    /// Training levels of one-hot encoded columns.
    pub levels: BTreeMap<String, Vec<String>>,
    pub splines: Vec<SplineParams>,
    /// Network input column names in matrix order.
    pub network_columns: Vec<String>,
}

impl PreprocessParams {
    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }

    pub fn spline(&self, column: &str) -> Option<(&SplineParams, &ColumnBlock)> {
        let sp = self.splines.iter().find(|s| s.column == column)?;
        let block = self.blocks.iter().find(|b| b.kind == BlockKind::Spline && b.name == column)?;
        Some((sp, block))
    }
}

/// How preprocessing parameters are obtained.
#[derive(Debug, Clone, Copy)]
pub enum Preprocess<'a> {
    /// Fit on the given rows; `labels` drive WOE maps unless `shared_woe`
    /// already holds a map for the column.
    Fit {
        labels: &'a [f64],
        shared_woe: Option<&'a BTreeMap<String, WoeMap>>,
    },
    Apply(&'a PreprocessParams),
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub x: Array2<f64>,
    pub blocks: Vec<ColumnBlock>,
    pub column_names: Vec<String>,
    /// Block-diagonal penalty, unscaled, zero outside spline blocks.
    pub penalty: Array2<f64>,
    pub q: Array2<f64>,
    pub r: Array2<f64>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.x.ncols()
    }

    /// Penalty with each spline block scaled by its smoothing parameter.
    pub fn scaled_penalty(&self, lambda: impl Fn(&str) -> f64) -> Array2<f64> {
        let mut s = self.penalty.clone();
        for b in self.blocks.iter().filter(|b| b.kind == BlockKind::Spline) {
            let l = lambda(&b.name);
            s.slice_mut(ndarray::s![b.range(), b.range()]).mapv_inplace(|v| v * l);
        }
        s
    }

    pub fn project_out(&self, u: &Array2<f64>) -> Result<Array2<f64>> {
        project_out(&self.q, u)
    }
}

/// `U - Q (Qᵀ U)`: removes the structured column space from `U`.
pub fn project_out(q: &Array2<f64>, u: &Array2<f64>) -> Result<Array2<f64>> {
    if q.nrows() != u.nrows() {
        return Err(Error::ShapeMismatch(format!("Q has {} rows, U has {}", q.nrows(), u.nrows())));
    }
    let coef = q.t().dot(u);
    Ok(u - &q.dot(&coef))
}

pub fn project_out_vec(q: &Array2<f64>, u: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if q.nrows() != u.len() {
        return Err(Error::ShapeMismatch(format!("Q has {} rows, u has {}", q.nrows(), u.len())));
    }
    let coef = q.t().dot(&u);
    Ok(&u - &q.dot(&coef))
}

/// Learns standardisation, encodings, levels and spline bases from `frame`.
pub fn fit_preprocess(
    spec: &DesignSpec,
    frame: &Frame,
    labels: &[f64],
    shared: Option<&BTreeMap<String, WoeMap>>,
) -> Result<PreprocessParams> {
    spec.validate()?;
    let mut standardisation = BTreeMap::new();
    let mut woe = BTreeMap::new();
    let mut levels = BTreeMap::new();

    for col in spec.linear_terms.iter().chain(&spec.network_inputs) {
        if frame.is_categorical(col)? {
            match spec.encoding(col) {
                Encoding::Woe => {
                    if woe.contains_key(col) {
                        continue;
                    }
                    let map = match shared.and_then(|m| m.get(col)) {
                        Some(m) => m.clone(),
                        None => {
                            if labels.len() != frame.n_rows() {
                                return Err(Error::ShapeMismatch("WOE fitting needs one label per row".into()));
                            }
                            woe_encode(frame.labels(col)?, labels, spec.woe_smoothing)?.0
                        }
                    };
                    woe.insert(col.clone(), map);
                }
                Encoding::OneHot => {
                    if let crate::frame::FrameColumn::Categorical { codes, levels: lv } = frame.column(col)? {
                        let mut present: Vec<String> = {
                            let mut seen = vec![false; lv.len()];
                            codes.iter().for_each(|&c| seen[c as usize] = true);
                            lv.iter().zip(seen).filter(|(_, s)| *s).map(|(l, _)| l.clone()).collect()
                        };
                        present.sort();
                        levels.insert(col.clone(), present);
                    }
                }
            }
        } else if spec.standardise && !standardisation.contains_key(col) {
            standardisation.insert(col.clone(), Standardisation::fit(frame.numeric(col)?));
        }
    }

    let mut splines = Vec::with_capacity(spec.spline_terms.len());
    for term in &spec.spline_terms {
        let x = frame.numeric(&term.column)?;
        let (lo, hi) = match term.range {
            Some(r) => r,
            None => x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        };
        let basis = CubicBasis::new(lo, hi, term.basis_dim)?;
        let mut sums = vec![0.0; term.basis_dim];
        let mut row = vec![0.0; term.basis_dim];
        for &v in x {
            basis.eval_into(v, &mut row);
            sums.iter_mut().zip(&row).for_each(|(s, r)| *s += r);
        }
        splines.push(SplineParams {
            column: term.column.clone(),
            basis,
            penalty_order: term.penalty_order,
            constraint: SumToZero::new(&sums),
        });
    }

    let mut params = PreprocessParams {
        column_names: Vec::new(),
        blocks: Vec::new(),
        standardisation,
        woe,
        levels,
        splines,
        network_columns: Vec::new(),
    };
    let (names, blocks) = layout(spec, &params);
    params.column_names = names;
    params.blocks = blocks;
    params.network_columns = network_layout(spec, &params);
    Ok(params)
}

fn layout(spec: &DesignSpec, params: &PreprocessParams) -> (Vec<String>, Vec<ColumnBlock>) {
    let mut names = Vec::new();
    let mut blocks = Vec::new();
    let mut push_block = |names: &mut Vec<String>, name: &str, kind, cols: Vec<String>| {
        blocks.push(ColumnBlock { name: name.to_string(), kind, start: names.len(), len: cols.len() });
        names.extend(cols);
    };
    if spec.include_intercept {
        push_block(&mut names, INTERCEPT, BlockKind::Intercept, vec![INTERCEPT.to_string()]);
    }
    for col in &spec.linear_terms {
        let cols = match params.levels.get(col) {
            Some(lv) => {
                let skip = usize::from(spec.include_intercept);
                lv.iter().skip(skip).map(|l| format!("{col}={l}")).collect()
            }
            None => vec![col.clone()],
        };
        push_block(&mut names, col, BlockKind::Linear, cols);
    }
    for sp in &params.splines {
        let cols = (1..=sp.n_columns()).map(|j| format!("s({}).{j}", sp.column)).collect();
        push_block(&mut names, &sp.column, BlockKind::Spline, cols);
    }
    (names, blocks)
}

fn network_layout(spec: &DesignSpec, params: &PreprocessParams) -> Vec<String> {
    let mut out = Vec::new();
    for col in &spec.network_inputs {
        match params.levels.get(col) {
            Some(lv) => out.extend(lv.iter().map(|l| format!("{col}={l}"))),
            None => out.push(col.clone()),
        }
    }
    out
}

fn numeric_or_encoded(spec: &DesignSpec, frame: &Frame, params: &PreprocessParams, col: &str) -> Result<Vec<f64>> {
    if frame.is_categorical(col)? {
        let map = params.woe.get(col).ok_or_else(|| Error::InvalidConfig(format!("no WOE map for `{col}`")))?;
        return Ok(map.encode(frame.labels(col)?));
    }
    let x = frame.numeric(col)?;
    Ok(match (spec.standardise, params.standardisation.get(col)) {
        (true, Some(st)) => x.iter().map(|&v| st.apply(v)).collect(),
        _ => x.to_vec(),
    })
}

fn one_hot_into(out: &mut ndarray::ArrayViewMut2<'_, f64>, frame: &Frame, col: &str, levels: &[String]) -> Result<()> {
    let index: BTreeMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    for (i, label) in frame.labels(col)?.enumerate() {
        // unseen levels fall back to the all-zero reference row
        if let Some(&j) = index.get(label) {
            out[[i, j]] = 1.0;
        }
    }
    Ok(())
}

/// Structured design rows for `frame` under fitted parameters.
pub fn design_rows(spec: &DesignSpec, frame: &Frame, params: &PreprocessParams) -> Result<Array2<f64>> {
    let n = frame.n_rows();
    let mut x = Array2::zeros((n, params.n_columns()));
    for block in &params.blocks {
        let mut view = x.slice_mut(ndarray::s![.., block.range()]);
        match block.kind {
            BlockKind::Intercept => view.fill(1.0),
            BlockKind::Linear => match params.levels.get(&block.name) {
                Some(lv) => {
                    let skip = usize::from(spec.include_intercept);
                    let mut full = Array2::zeros((n, lv.len()));
                    one_hot_into(&mut full.view_mut(), frame, &block.name, lv)?;
                    view.assign(&full.slice(ndarray::s![.., skip..]));
                }
                None => {
                    let v = numeric_or_encoded(spec, frame, params, &block.name)?;
                    view.column_mut(0).assign(&Array1::from(v));
                }
            },
            BlockKind::Spline => {
                let (sp, _) = params.spline(&block.name).ok_or_else(|| Error::UnknownColumn(block.name.clone()))?;
                let xs = frame.numeric(&sp.column)?;
                let mut raw = vec![0.0; sp.basis.dim()];
                let mut out = vec![0.0; sp.n_columns()];
                for (i, &v) in xs.iter().enumerate() {
                    sp.write_row(v, &mut raw, &mut out);
                    view.row_mut(i).iter_mut().zip(&out).for_each(|(d, s)| *d = *s);
                }
            }
        }
    }
    Ok(x)
}

/// Network input matrix for `frame` under fitted parameters.
pub fn network_inputs(spec: &DesignSpec, frame: &Frame, params: &PreprocessParams) -> Result<Array2<f64>> {
    let n = frame.n_rows();
    let mut u = Array2::zeros((n, params.network_columns.len()));
    let mut at = 0;
    for col in &spec.network_inputs {
        match params.levels.get(col) {
            Some(lv) => {
                let mut view = u.slice_mut(ndarray::s![.., at..at + lv.len()]);
                one_hot_into(&mut view, frame, col, lv)?;
                at += lv.len();
            }
            None => {
                let v = numeric_or_encoded(spec, frame, params, col)?;
                u.column_mut(at).assign(&Array1::from(v));
                at += 1;
            }
        }
    }
    Ok(u)
}

pub fn block_penalty(params: &PreprocessParams) -> Array2<f64> {
    let m = params.n_columns();
    let mut s = Array2::zeros((m, m));
    for block in params.blocks.iter().filter(|b| b.kind == BlockKind::Spline) {
        let (sp, _) = params.spline(&block.name).expect("spline block has params");
        s.slice_mut(ndarray::s![block.range(), block.range()]).assign(&sp.penalty());
    }
    s
}

/// Relative `|R_jj|` threshold below which a column counts as collinear.
const RANK_TOL: f64 = 1e-9;

/// Builds `X = [1 | X_lin | X_spl]`, its penalty and the thin QR factor.
pub fn build_design(
    spec: &DesignSpec,
    frame: &Frame,
    preprocess: Preprocess<'_>,
) -> Result<(DesignMatrix, PreprocessParams)> {
    let params = match preprocess {
        Preprocess::Fit { labels, shared_woe } => fit_preprocess(spec, frame, labels, shared_woe)?,
        Preprocess::Apply(p) => p.clone(),
    };
    let x = design_rows(spec, frame, &params)?;
    let ThinQr { q, r } = factorise(&x, &params.blocks)?;
    let penalty = block_penalty(&params);
    Ok((
        DesignMatrix { x, blocks: params.blocks.clone(), column_names: params.column_names.clone(), penalty, q, r },
        params,
    ))
}

/// Thin QR of a design, refusing collinear or too-short designs.
pub fn factorise(x: &Array2<f64>, blocks: &[ColumnBlock]) -> Result<ThinQr> {
    let (n, m) = x.dim();
    if n < m {
        return Err(Error::RankDeficient { block: format!("{n} rows for {m} columns"), column: n });
    }
    let qr = thin_qr(x);
    check_rank(&x.view(), &qr.r, blocks)?;
    Ok(qr)
}

fn check_rank(x: &ArrayView2<'_, f64>, r: &Array2<f64>, blocks: &[ColumnBlock]) -> Result<()> {
    let norms: Vec<f64> = x.axis_iter(Axis(1)).map(|c| c.dot(&c).sqrt()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    for (j, &norm) in norms.iter().enumerate() {
        if norm <= 1e-12 * max_norm || r[[j, j]].abs() <= RANK_TOL * norm {
            let block = blocks.iter().find(|b| b.range().contains(&j)).map(|b| b.name.clone()).unwrap_or_default();
            return Err(Error::RankDeficient { block, column: j });
        }
    }
    Ok(())
}
