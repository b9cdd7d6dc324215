//! Weight-of-evidence encoding of categorical columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Key holding the value used for categories not seen during fitting.
pub const UNSEEN: &str = "__unseen__";

pub const DEFAULT_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeMap {
    values: BTreeMap<String, f64>,
}

impl WoeMap {
    pub fn get(&self, category: &str) -> f64 {
        self.values.get(category).or_else(|| self.values.get(UNSEEN)).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn encode<'a>(&self, categories: impl IntoIterator<Item = &'a str>) -> Vec<f64> {
        categories.into_iter().map(|c| self.get(c)).collect()
    }
}

/// Fits `WOE(c) = ln(((pos_c + s) / (pos + s C)) / ((neg_c + s) / (neg + s C)))`
/// and returns the map together with the encoded column.
pub fn woe_encode<'a, I>(categories: I, target: &[f64], smoothing: f64) -> Result<(WoeMap, Vec<f64>)>
where
    I: IntoIterator<Item = &'a str>,
{
    if !(smoothing > 0.0) {
        return Err(Error::InvalidConfig(format!("WOE smoothing must be positive, got {smoothing}")));
    }
    let cats: Vec<&str> = categories.into_iter().collect();
    if cats.len() != target.len() {
        return Err(Error::ShapeMismatch(format!("{} categories for {} targets", cats.len(), target.len())));
    }
    let mut cells: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let (mut pos, mut neg) = (0.0, 0.0);
    for (&c, &y) in cats.iter().zip(target) {
        let cell = cells.entry(c).or_insert((0.0, 0.0));
        if y > 0.5 {
            cell.0 += 1.0;
            pos += 1.0;
        } else {
            cell.1 += 1.0;
            neg += 1.0;
        }
    }
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::AllSameTarget);
    }
    let n_cat = cells.len() as f64;
    let mut values: BTreeMap<String, f64> = cells
        .into_iter()
        .map(|(c, (p, n))| {
            let num = (p + smoothing) / (pos + smoothing * n_cat);
            let den = (n + smoothing) / (neg + smoothing * n_cat);
            (c.to_string(), (num / den).ln())
        })
        .collect();
    values.insert(UNSEEN.to_string(), 0.0);
    let map = WoeMap { values };
    let encoded = map.encode(cats);
    Ok((map, encoded))
}
