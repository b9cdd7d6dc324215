//! State space, panel data and per-transition training sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered pair `from -> to` of distinct states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn from(self) -> usize {
        self.0
    }

    pub fn to(self) -> usize {
        self.1
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    n_states: usize,
    absorbing: Vec<usize>,
    edges: Vec<Edge>,
}

impl StateSpace {
    pub fn new(n_states: usize, absorbing: Vec<usize>, edges: Vec<Edge>) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::InvalidStateSpace("need at least two states".into()));
        }
        let absorbing: Vec<usize> = absorbing.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let edges: Vec<Edge> = edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        for &a in &absorbing {
            if a >= n_states {
                return Err(Error::InvalidStateSpace(format!("absorbing state {a} out of range")));
            }
        }
        for e in &edges {
            if e.0 >= n_states || e.1 >= n_states {
                return Err(Error::InvalidStateSpace(format!("edge {e} out of range")));
            }
            if e.0 == e.1 {
                return Err(Error::InvalidStateSpace(format!("edge {e} is a self-loop")));
            }
            if absorbing.contains(&e.0) {
                return Err(Error::InvalidStateSpace(format!("edge {e} leaves an absorbing state")));
            }
        }
        Ok(Self { n_states, absorbing, edges })
    }

    /// The four-state delinquency process: current, 30-59, 60-89 and 90+ days
    /// past due, with state 3 absorbing.
    pub fn delinquency() -> Self {
        Self::new(4, vec![3], vec![Edge(0, 1), Edge(1, 0), Edge(1, 2), Edge(2, 0), Edge(2, 1), Edge(2, 3)])
            .expect("default state space is valid")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn absorbing(&self) -> &[usize] {
        &self.absorbing
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing.contains(&state)
    }

    pub fn is_edge(&self, edge: Edge) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    /// Self-loops are always permissible.
    pub fn is_permissible(&self, from: usize, to: usize) -> bool {
        from == to || self.is_edge(Edge(from, to))
    }

    pub fn exits(&self, from: usize) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied().filter(move |e| e.0 == from)
    }
}

impl Default for StateSpace {
    fn default() -> Self {
        Self::delinquency()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    TimeVarying,
    Categorical,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Sorted category labels; empty for numeric columns.
    pub levels: Vec<String>,
    /// Position inside the subject's numeric or categorical row.
    slot: usize,
}

impl ColumnSpec {
    pub fn slot(&self) -> usize {
        self.slot
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovariateSchema {
    columns: Vec<ColumnSpec>,
    n_numeric: usize,
    n_categorical: usize,
}

impl CovariateSchema {
    /// `levels` must hold one (possibly empty) sorted label list per column.
    pub fn new(columns: Vec<(String, ColumnKind, Vec<String>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut specs = Vec::with_capacity(columns.len());
        let (mut n_numeric, mut n_categorical) = (0, 0);
        for (name, kind, levels) in columns {
            if matches!(name.as_str(), "id" | "t" | "state") || !seen.insert(name.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate or reserved column `{name}`")));
            }
            let slot = if kind.is_numeric() {
                n_numeric += 1;
                n_numeric - 1
            } else {
                n_categorical += 1;
                n_categorical - 1
            };
            specs.push(ColumnSpec { name, kind, levels, slot });
        }
        Ok(Self { columns: specs, n_numeric, n_categorical })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn n_numeric(&self) -> usize {
        self.n_numeric
    }

    pub fn n_categorical(&self) -> usize {
        self.n_categorical
    }
}

/// One covariate value of a raw record.
#[derive(Debug, Clone, PartialEq)]
pub enum CovValue {
    Num(f64),
    Cat(String),
}

/// One subject-month as read from an external source.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub t: u32,
    pub state: usize,
    pub origin_offset: i64,
    pub values: Vec<CovValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPath {
    pub id: String,
    pub origin_offset: i64,
    /// `states[t]` for t = 0..=T_i.
    pub states: Vec<usize>,
    /// Row-major numeric covariates, one row per state.
    pub numeric: Vec<f64>,
    /// Row-major categorical level codes, one row per state.
    pub categorical: Vec<u32>,
}

impl SubjectPath {
    /// Last observed time T_i.
    pub fn last_time(&self) -> u32 {
        (self.states.len() - 1) as u32
    }

    pub fn state_at(&self, t: u32) -> Option<usize> {
        self.states.get(t as usize).copied()
    }
}

/// Per-subject monthly state paths with covariates; immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    space: StateSpace,
    schema: CovariateSchema,
    subjects: Vec<SubjectPath>,
}

impl Panel {
    /// Validates every subject against the state space and schema.
    pub fn new(space: StateSpace, schema: CovariateSchema, mut subjects: Vec<SubjectPath>) -> Result<Self> {
        subjects.sort_by(|a, b| a.id.cmp(&b.id));
        for s in &subjects {
            validate_subject(&space, &schema, s)?;
        }
        Ok(Self { space, schema, subjects })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn schema(&self) -> &CovariateSchema {
        &self.schema
    }

    pub fn subjects(&self) -> &[SubjectPath] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.subjects.iter().map(|s| s.states.len()).sum()
    }

    /// State of subject `i` at `t`. A path that ended in an absorbing state
    /// stays there; otherwise times past the path end are unobserved.
    pub fn state_at(&self, i: usize, t: u32) -> Option<usize> {
        let s = &self.subjects[i];
        s.state_at(t).or_else(|| {
            let last = *s.states.last()?;
            self.space.is_absorbing(last).then_some(last)
        })
    }

    /// Numeric covariate of subject `i` at time `t`; times past the end of the
    /// path carry the last observed row forward.
    pub fn numeric_at(&self, i: usize, t: u32, slot: usize) -> f64 {
        let s = &self.subjects[i];
        let row = (t as usize).min(s.states.len() - 1);
        s.numeric[row * self.schema.n_numeric + slot]
    }

    pub fn category_at(&self, i: usize, t: u32, slot: usize) -> u32 {
        let s = &self.subjects[i];
        let row = (t as usize).min(s.states.len() - 1);
        s.categorical[row * self.schema.n_categorical + slot]
    }

    /// Same panel restricted to the given subject indices (duplicates kept).
    pub fn select(&self, indices: &[usize]) -> Panel {
        Panel {
            space: self.space.clone(),
            schema: self.schema.clone(),
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
        }
    }
}

fn validate_subject(space: &StateSpace, schema: &CovariateSchema, s: &SubjectPath) -> Result<()> {
    let n = s.states.len();
    if n == 0 || s.numeric.len() != n * schema.n_numeric || s.categorical.len() != n * schema.n_categorical {
        let rows = s
            .numeric
            .len()
            .checked_div(schema.n_numeric)
            .or_else(|| s.categorical.len().checked_div(schema.n_categorical))
            .unwrap_or(n);
        return Err(Error::CovariateRowMismatch { id: s.id.clone(), rows, states: n });
    }
    for (t, &z) in s.states.iter().enumerate() {
        if z >= space.n_states() {
            return Err(Error::InvalidState { id: s.id.clone(), t: t as u32, state: z });
        }
    }
    for t in 1..n {
        let (prev, next) = (s.states[t - 1], s.states[t]);
        if space.is_absorbing(prev) && next != prev {
            return Err(Error::PostAbsorbingActivity { id: s.id.clone(), t: t as u32, state: prev });
        }
        if !space.is_permissible(prev, next) {
            return Err(Error::IllegalTransition { id: s.id.clone(), t: t as u32, from: prev, to: next });
        }
    }
    for spec in &schema.columns {
        if spec.kind == ColumnKind::Categorical {
            for row in 0..n {
                let code = s.categorical[row * schema.n_categorical + spec.slot];
                if code as usize >= spec.levels.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "subject {}: level code {code} out of range for `{}`",
                        s.id, spec.name
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Groups raw subject-month records by id, sorts by time and validates.
///
/// Categorical levels are collected from the data and sorted, so the level
/// coding depends only on the set of labels present.
pub fn build_panel(records: Vec<RawRecord>, columns: &[(String, ColumnKind)], space: StateSpace) -> Result<Panel> {
    let mut levels: Vec<BTreeSet<String>> = vec![BTreeSet::new(); columns.len()];
    for r in &records {
        if r.values.len() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "subject {} t={}: {} values for {} columns",
                r.id,
                r.t,
                r.values.len(),
                columns.len()
            )));
        }
        for (j, ((name, kind), v)) in columns.iter().zip(&r.values).enumerate() {
            match (kind.is_numeric(), v) {
                (true, CovValue::Num(_)) => {}
                (false, CovValue::Cat(s)) => {
                    levels[j].insert(s.clone());
                }
                _ => {
                    return Err(Error::ShapeMismatch(format!(
                        "subject {} t={}: value kind does not match column `{name}`",
                        r.id, r.t
                    )))
                }
            }
        }
    }
    let schema = CovariateSchema::new(
        columns.iter().zip(levels).map(|((name, kind), lv)| (name.clone(), *kind, lv.into_iter().collect())).collect(),
    )?;
    let level_index: Vec<BTreeMap<&str, u32>> = schema
        .columns
        .iter()
        .map(|c| c.levels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect())
        .collect();

    let mut grouped: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.id.clone()).or_default().push(r);
    }
    let mut subjects = Vec::with_capacity(grouped.len());
    for (id, mut rows) in grouped {
        rows.sort_by_key(|r| r.t);
        let origin_offset = rows[0].origin_offset;
        let mut states = Vec::with_capacity(rows.len());
        let mut numeric = Vec::with_capacity(rows.len() * schema.n_numeric);
        let mut categorical = Vec::with_capacity(rows.len() * schema.n_categorical);
        for (expected, r) in rows.iter().enumerate() {
            if r.t != expected as u32 {
                return Err(Error::NonContiguousTime { id, expected: expected as u32, found: r.t });
            }
            if r.origin_offset != origin_offset {
                return Err(Error::ShapeMismatch(format!("subject {id}: origin offset changes over time")));
            }
            states.push(r.state);
            for (j, v) in r.values.iter().enumerate() {
                match v {
                    CovValue::Num(x) => numeric.push(*x),
                    CovValue::Cat(s) => categorical.push(level_index[j][s.as_str()]),
                }
            }
        }
        subjects.push(SubjectPath { id, origin_offset, states, numeric, categorical });
    }
    Panel::new(space, schema, subjects)
}

/// How rows where the subject leaves `from` for a third state are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetingExits {
    /// Condition on being in one of the two states (rows dropped).
    #[default]
    Exclude,
    /// Keep them as non-events.
    KeepAsZero,
}

/// A binary training row: the move from `t - 1` to `t` of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionRow {
    pub subject: usize,
    pub t: u32,
    pub label: bool,
}

/// Binary logit training set for one permissible transition.
#[derive(Debug, Clone)]
pub struct TransitionDataset<'p> {
    panel: &'p Panel,
    edge: Edge,
    rows: Vec<TransitionRow>,
}

impl<'p> TransitionDataset<'p> {
    pub fn new(panel: &'p Panel, edge: Edge, rows: Vec<TransitionRow>) -> Self {
        Self { panel, edge, rows }
    }

    pub fn panel(&self) -> &'p Panel {
        self.panel
    }

    pub fn edge(&self) -> Edge {
        self.edge
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| if r.label { 1.0 } else { 0.0 }).collect()
    }

    /// Refuses datasets whose labels are all identical (or that are empty).
    pub fn ensure_non_degenerate(&self) -> Result<()> {
        let positives = self.positives();
        if positives == 0 || positives == self.rows.len() {
            return Err(Error::DegenerateLabels {
                from: self.edge.0,
                to: self.edge.1,
                rows: self.rows.len(),
                positives,
            });
        }
        Ok(())
    }

    /// Rows belonging to the listed subject draws, each draw contributing its
    /// rows once per occurrence. Used for subject-level resampling.
    pub fn resample(&self, draws: &[usize]) -> TransitionDataset<'p> {
        let mut by_subject: BTreeMap<usize, Vec<TransitionRow>> = BTreeMap::new();
        for r in &self.rows {
            by_subject.entry(r.subject).or_default().push(*r);
        }
        let rows = draws.iter().filter_map(|s| by_subject.get(s)).flat_map(|rs| rs.iter().copied()).collect();
        TransitionDataset { panel: self.panel, edge: self.edge, rows }
    }
}

/// Rows with `Z(t-1) = from` and `Z(t) ∈ {from, to}`; label is `Z(t) = to`.
/// Covariates for row `t` are read at `t - 1`.
pub fn extract_transition_dataset(panel: &Panel, edge: Edge) -> Result<TransitionDataset<'_>> {
    extract_transition_dataset_with(panel, edge, CompetingExits::Exclude)
}

pub fn extract_transition_dataset_with(
    panel: &Panel,
    edge: Edge,
    competing: CompetingExits,
) -> Result<TransitionDataset<'_>> {
    if !panel.space().is_edge(edge) {
        return Err(Error::UnknownEdge { from: edge.0, to: edge.1 });
    }
    let Edge(k, l) = edge;
    let mut rows = Vec::new();
    for (i, s) in panel.subjects().iter().enumerate() {
        for t in 1..s.states.len() {
            if s.states[t - 1] != k {
                continue;
            }
            let next = s.states[t];
            let keep = next == k || next == l || competing == CompetingExits::KeepAsZero;
            if keep {
                rows.push(TransitionRow { subject: i, t: t as u32, label: next == l });
            }
        }
    }
    Ok(TransitionDataset::new(panel, edge, rows))
}

/// From-state × to-state table of observed month-to-month moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n_states: usize,
    /// Row-major `n_states × n_states`.
    pub counts: Vec<u64>,
}

impl TransitionCounts {
    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.n_states + to]
    }

    pub fn row_total(&self, from: usize) -> u64 {
        (0..self.n_states).map(|to| self.get(from, to)).sum()
    }

    /// Non-zero cells as `((from, to), count)`.
    pub fn nonzero(&self) -> BTreeMap<(usize, usize), u64> {
        let mut out = BTreeMap::new();
        for k in 0..self.n_states {
            for l in 0..self.n_states {
                let c = self.get(k, l);
                if c > 0 {
                    out.insert((k, l), c);
                }
            }
        }
        out
    }
}

/// Counts transition events. With `distinct_subjects`, each subject counts
/// at most once per (from, to) cell instead.
pub fn transition_counts(panel: &Panel, distinct_subjects: bool) -> TransitionCounts {
    let k = panel.space().n_states();
    let mut counts = vec![0u64; k * k];
    for s in panel.subjects() {
        let mut seen = vec![false; k * k];
        for w in s.states.windows(2) {
            let cell = w[0] * k + w[1];
            if distinct_subjects {
                if !seen[cell] {
                    seen[cell] = true;
                    counts[cell] += 1;
                }
            } else {
                counts[cell] += 1;
            }
        }
    }
    TransitionCounts { n_states: k, counts }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn path_panel(paths: &[&[usize]]) -> Panel {
        let records = paths
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                p.iter().enumerate().map(move |(t, &z)| RawRecord {
                    id: format!("s{i:03}"),
                    t: t as u32,
                    state: z,
                    origin_offset: 0,
                    values: vec![CovValue::Num(t as f64 + i as f64)],
                })
            })
            .collect();
        build_panel(records, &[("x".into(), ColumnKind::Numeric)], StateSpace::delinquency()).unwrap()
    }

    fn try_path(p: &[usize]) -> Result<Panel> {
        let records = p
            .iter()
            .enumerate()
            .map(|(t, &z)| RawRecord { id: "a".into(), t: t as u32, state: z, origin_offset: 0, values: vec![] })
            .collect();
        build_panel(records, &[], StateSpace::delinquency())
    }

    #[test]
    fn default_graph_matches_delinquency_process() {
        let s = StateSpace::default();
        assert_eq!(s.n_states(), 4);
        assert_eq!(s.absorbing(), &[3]);
        assert_eq!(s.edges(), &[Edge(0, 1), Edge(1, 0), Edge(1, 2), Edge(2, 0), Edge(2, 1), Edge(2, 3)]);
        assert!(StateSpace::new(4, vec![3], vec![Edge(3, 0)]).is_err());
        assert!(StateSpace::new(4, vec![3], vec![Edge(0, 4)]).is_err());
    }

    #[test]
    fn build_panel_accepts_permissible_path() {
        let p = try_path(&[0, 0, 1, 0]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.subjects()[0].last_time(), 3);
    }

    #[test]
    fn build_panel_rejects_illegal_moves() {
        assert!(matches!(try_path(&[0, 2]), Err(Error::IllegalTransition { from: 0, to: 2, .. })));
        assert!(matches!(try_path(&[0, 1, 3]), Err(Error::IllegalTransition { from: 1, to: 3, .. })));
        assert!(matches!(try_path(&[0, 1, 2, 3, 2]), Err(Error::PostAbsorbingActivity { .. })));
        assert!(try_path(&[0, 1, 2, 3, 3]).is_ok());
    }

    #[test]
    fn build_panel_rejects_time_gaps() {
        let records = [0u32, 1, 3]
            .iter()
            .map(|&t| RawRecord { id: "a".into(), t, state: 0, origin_offset: 0, values: vec![] })
            .collect();
        let err = build_panel(records, &[], StateSpace::delinquency()).unwrap_err();
        assert!(matches!(err, Error::NonContiguousTime { expected: 2, found: 3, .. }));
    }

    #[test]
    fn extraction_follows_two_state_conditioning() {
        let p = path_panel(&[&[0, 1, 0, 1, 2]]);
        let ds = extract_transition_dataset(&p, Edge(1, 2)).unwrap();
        let got: Vec<(u32, bool)> = ds.rows().iter().map(|r| (r.t, r.label)).collect();
        // the 1 -> 0 move at t=2 is a competing exit and only enters when kept as a zero
        assert_eq!(got, vec![(4, true)]);
        let kept = extract_transition_dataset_with(&p, Edge(1, 2), CompetingExits::KeepAsZero).unwrap();
        let got: Vec<(u32, bool)> = kept.rows().iter().map(|r| (r.t, r.label)).collect();
        assert_eq!(got, vec![(2, false), (4, true)]);

        let p = path_panel(&[&[0, 0, 0]]);
        assert!(extract_transition_dataset(&p, Edge(1, 0)).unwrap().is_empty());

        let p = path_panel(&[&[1, 2]]);
        assert!(extract_transition_dataset(&p, Edge(1, 0)).unwrap().is_empty());
        let kept = extract_transition_dataset_with(&p, Edge(1, 0), CompetingExits::KeepAsZero).unwrap();
        assert_eq!(kept.len(), 1);
        assert!(!kept.rows()[0].label);
    }

    #[test]
    fn unknown_edge_is_refused() {
        let p = path_panel(&[&[0, 0]]);
        assert!(matches!(extract_transition_dataset(&p, Edge(0, 2)), Err(Error::UnknownEdge { .. })));
    }

    #[test]
    fn degenerate_labels_refused_at_fit_boundary() {
        let p = path_panel(&[&[0, 0, 0]]);
        let ds = extract_transition_dataset(&p, Edge(0, 1)).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(matches!(ds.ensure_non_degenerate(), Err(Error::DegenerateLabels { positives: 0, .. })));
    }

    #[test]
    fn counts_match_hand_tallies() {
        let c = transition_counts(&path_panel(&[&[0, 1, 2, 3]]), false);
        assert_eq!(c.nonzero(), BTreeMap::from([((0, 1), 1), ((1, 2), 1), ((2, 3), 1)]));
        let c = transition_counts(&path_panel(&[&[0, 0, 0]]), false);
        assert_eq!(c.nonzero(), BTreeMap::from([((0, 0), 2)]));
        let c = transition_counts(&path_panel(&[&[0, 1, 0], &[0, 1, 2]]), false);
        assert_eq!(c.nonzero(), BTreeMap::from([((0, 1), 2), ((1, 0), 1), ((1, 2), 1)]));
    }

    #[test]
    fn distinct_counting_caps_per_subject() {
        let p = path_panel(&[&[0, 1, 0, 1, 0]]);
        assert_eq!(transition_counts(&p, false).get(0, 1), 2);
        assert_eq!(transition_counts(&p, true).get(0, 1), 1);
    }

    #[test]
    fn covariates_carry_forward_past_path_end() {
        let p = path_panel(&[&[0, 0, 1]]);
        assert_eq!(p.numeric_at(0, 1, 0), 1.0);
        assert_eq!(p.numeric_at(0, 10, 0), 2.0);
    }
}
