//! Column-oriented covariate rows feeding the design builder.

use crate::error::{Error, Result};
use crate::panel::{ColumnKind, Panel, TransitionDataset};

/// Name of the synthetic column holding the transition time `t`.
pub const TIME_COLUMN: &str = "t";

/// A transition of subject `subject` from `t - 1` to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRef {
    pub subject: usize,
    pub t: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameColumn {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<u32>, levels: Vec<String> },
}

impl FrameColumn {
    fn len(&self) -> usize {
        match self {
            FrameColumn::Numeric(v) => v.len(),
            FrameColumn::Categorical { codes, .. } => codes.len(),
        }
    }

    fn select(&self, idx: &[usize]) -> FrameColumn {
        match self {
            FrameColumn::Numeric(v) => FrameColumn::Numeric(idx.iter().map(|&i| v[i]).collect()),
            FrameColumn::Categorical { codes, levels } => {
                FrameColumn::Categorical { codes: idx.iter().map(|&i| codes[i]).collect(), levels: levels.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<FrameColumn>,
}

impl Frame {
    pub fn new(n_rows: usize) -> Self {
        Self { n_rows, names: Vec::new(), columns: Vec::new() }
    }

    pub fn with_column(mut self, name: impl Into<String>, column: FrameColumn) -> Result<Self> {
        let name = name.into();
        if column.len() != self.n_rows {
            return Err(Error::ShapeMismatch(format!(
                "column `{name}` has {} rows, frame has {}",
                column.len(),
                self.n_rows
            )));
        }
        if let Some(pos) = self.names.iter().position(|n| *n == name) {
            self.columns[pos] = column;
        } else {
            self.names.push(name);
            self.columns.push(column);
        }
        Ok(self)
    }

    /// One row per transition with the covariates observed at `t - 1` and
    /// the time column set to `t`.
    pub fn from_panel(panel: &Panel, rows: &[RowRef]) -> Self {
        let mut frame = Frame::new(rows.len());
        frame.names.push(TIME_COLUMN.to_string());
        frame.columns.push(FrameColumn::Numeric(rows.iter().map(|r| r.t as f64).collect()));
        for spec in panel.schema().columns() {
            let lag = |r: &RowRef| r.t.saturating_sub(1);
            let col = match spec.kind {
                ColumnKind::Numeric | ColumnKind::TimeVarying => FrameColumn::Numeric(
                    rows.iter().map(|r| panel.numeric_at(r.subject, lag(r), spec.slot())).collect(),
                ),
                ColumnKind::Categorical => FrameColumn::Categorical {
                    codes: rows.iter().map(|r| panel.category_at(r.subject, lag(r), spec.slot())).collect(),
                    levels: spec.levels.clone(),
                },
            };
            frame.names.push(spec.name.clone());
            frame.columns.push(col);
        }
        frame
    }

    pub fn from_dataset(ds: &TransitionDataset<'_>) -> Self {
        let rows: Vec<RowRef> = ds.rows().iter().map(|r| RowRef { subject: r.subject, t: r.t }).collect();
        Self::from_panel(ds.panel(), &rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&FrameColumn> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name)? {
            FrameColumn::Numeric(v) => Ok(v),
            FrameColumn::Categorical { .. } => {
                Err(Error::InvalidConfig(format!("column `{name}` is categorical, numeric expected")))
            }
        }
    }

    /// Category labels of a categorical column, row by row.
    pub fn labels<'a>(&'a self, name: &str) -> Result<impl Iterator<Item = &'a str> + 'a> {
        match self.column(name)? {
            FrameColumn::Categorical { codes, levels } => Ok(codes.iter().map(move |&c| levels[c as usize].as_str())),
            FrameColumn::Numeric(_) => {
                Err(Error::InvalidConfig(format!("column `{name}` is numeric, categorical expected")))
            }
        }
    }

    pub fn is_categorical(&self, name: &str) -> Result<bool> {
        Ok(matches!(self.column(name)?, FrameColumn::Categorical { .. }))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Frame {
        Frame {
            n_rows: idx.len(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
        }
    }
}
