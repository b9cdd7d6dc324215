//! Frozen catalogue of ten smooth test functions on [-1, 1].
//!
//! Each function is shifted by its mean over a 1001-point grid so that it
//! carries no level. Ids and formulas must not change.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const N_NONLINEAR: usize = 10;
const GRID: usize = 1001;

fn raw(id: usize, x: f64) -> f64 {
    match id {
        1 => (PI * x).sin(),
        2 => (PI * x).cos(),
        3 => 1.5 * x.powi(3),
        4 => 2.0 * (-8.0 * x * x).exp(),
        5 => 1.5 * (3.0 * x).tanh(),
        6 => 2.0 / (1.0 + (-10.0 * x).exp()),
        7 => (-x).exp() * (2.0 * PI * x).sin(),
        8 => 1.5 * x * x,
        9 => 1.5 * (x * x + 0.01).sqrt(),
        10 => 2.0 * (-2.0 * (x + 1.0)).exp(),
        _ => unreachable!("checked by caller"),
    }
}

/// Evenly spaced grid of `n` points on [-1, 1].
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

fn offsets() -> &'static [f64; N_NONLINEAR] {
    static OFFSETS: OnceLock<[f64; N_NONLINEAR]> = OnceLock::new();
    OFFSETS.get_or_init(|| {
        let grid = unit_grid(GRID);
        std::array::from_fn(|k| grid.iter().map(|&x| raw(k + 1, x)).sum::<f64>() / GRID as f64)
    })
}

/// A catalogue function by id (1 to 10).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Nonlinear(usize);

impl Nonlinear {
    pub fn new(id: usize) -> Result<Self> {
        if (1..=N_NONLINEAR).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::UnknownNonlinear(id))
        }
    }

    pub fn id(self) -> usize {
        self.0
    }

    pub fn eval(self, x: f64) -> f64 {
        raw(self.0, x) - offsets()[self.0 - 1]
    }
}
