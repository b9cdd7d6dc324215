//! Cubic B-spline bases on evenly spaced knots with difference penalties.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEGREE: usize = 3;

/// Degree-3 B-spline basis of dimension `dim` over `[lo, hi]`.
///
/// The `dim - 3` equal intervals of the range carry the interior knots; three
/// more knots are placed at the same spacing beyond each end, so every point
/// of `[lo, hi]` sees exactly four non-zero basis functions summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicBasis {
    lo: f64,
    hi: f64,
    dim: usize,
    knots: Vec<f64>,
}

impl CubicBasis {
    pub fn new(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidRange { lo, hi });
        }
        if dim < DEGREE + 1 {
            return Err(Error::DimTooSmall(dim));
        }
        let h = (hi - lo) / (dim - DEGREE) as f64;
        let knots = (0..dim + DEGREE + 1).map(|i| lo + (i as f64 - DEGREE as f64) * h).collect();
        Ok(Self { lo, hi, dim, knots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Writes the basis row at `x` (clamped into range) into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        out.iter_mut().for_each(|v| *v = 0.0);
        let x = x.clamp(self.lo, self.hi);
        let h = (self.hi - self.lo) / (self.dim - DEGREE) as f64;
        // knot span index: knots[span] <= x < knots[span + 1]
        let span = (DEGREE + ((x - self.lo) / h).floor() as usize).min(self.dim - 1);
        let mut n = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        out[span - DEGREE..=span].copy_from_slice(&n);
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn matrix(&self, xs: &[f64]) -> Array2<f64> {
        let mut b = Array2::zeros((xs.len(), self.dim));
        for (i, &x) in xs.iter().enumerate() {
            self.eval_into(x, b.row_mut(i).as_slice_mut().expect("row-major"));
        }
        b
    }
}

/// `DᵀD` for the order-`order` difference operator on `dim` coefficients.
pub fn difference_penalty(dim: usize, order: usize) -> Array2<f64> {
    let mut d = Array2::<f64>::eye(dim);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        let mut next = Array2::zeros((rows, dim));
        for i in 0..rows {
            for j in 0..dim {
                next[[i, j]] = d[[i + 1, j]] - d[[i, j]];
            }
        }
        d = next;
    }
    d.t().dot(&d)
}

/// Basis matrix and second-order difference penalty for `x` over `range`.
pub fn spline_basis(x: &[f64], dim: usize, range: (f64, f64)) -> Result<(Array2<f64>, Array2<f64>)> {
    let basis = CubicBasis::new(range.0, range.1, dim)?;
    Ok((basis.matrix(x), difference_penalty(dim, 2)))
}

/// Householder reparameterisation removing the direction `c` from a spline
/// block so that `Σ_rows B Z = 0` when `c` holds the column sums of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumToZero {
    v: Vec<f64>,
    vtv: f64,
}

impl SumToZero {
    pub fn new(c: &[f64]) -> Self {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut v = c.to_vec();
        if norm > 0.0 {
            v[0] += if c[0] >= 0.0 { norm } else { -norm };
        }
        let vtv = v.iter().map(|x| x * x).sum();
        Self { v, vtv }
    }

    fn reflect(&self, b: &mut [f64]) {
        if self.vtv == 0.0 {
            return;
        }
        let dot: f64 = self.v.iter().zip(b.iter()).map(|(a, b)| a * b).sum();
        let s = 2.0 * dot / self.vtv;
        for (bi, vi) in b.iter_mut().zip(&self.v) {
            *bi -= s * vi;
        }
    }

    /// Maps a raw basis row of length `d` to the constrained row of length `d - 1`.
    pub fn apply_row(&self, raw: &mut [f64], out: &mut [f64]) {
        self.reflect(raw);
        out.copy_from_slice(&raw[1..]);
    }

    /// Constrained coefficients back to raw spline coefficients.
    pub fn expand_coefficients(&self, gamma: &[f64]) -> Vec<f64> {
        let mut full = Vec::with_capacity(gamma.len() + 1);
        full.push(0.0);
        full.extend_from_slice(gamma);
        self.reflect(&mut full);
        full
    }

    /// `Zᵀ S Z` for a raw penalty `S`.
    pub fn constrain_penalty(&self, s: &Array2<f64>) -> Array2<f64> {
        let d = s.nrows();
        let mut hs = s.clone();
        for j in 0..d {
            let mut col = hs.column(j).to_vec();
            self.reflect(&mut col);
            hs.column_mut(j).assign(&ndarray::Array1::from(col));
        }
        for i in 0..d {
            let mut row = hs.row(i).to_vec();
            self.reflect(&mut row);
            hs.row_mut(i).assign(&ndarray::Array1::from(row));
        }
        hs.slice(ndarray::s![1.., 1..]).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook recursive Cox–de Boor, independent of the triangular scheme above.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            return if knots[i] <= x && x < knots[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            v += (x - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, x);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, i + 1, p - 1, x);
        }
        v
    }

    #[test]
    fn rows_sum_to_one_including_endpoints() {
        let b = CubicBasis::new(-2.0, 5.0, 10).unwrap();
        for x in [-2.0, -1.3, 0.0, 2.2, 4.999, 5.0, 7.0, -9.0] {
            let s: f64 = b.eval(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "x={x} sum={s}");
        }
    }

    #[test]
    fn midpoint_dim4_is_symmetric_and_matches_recursion() {
        let b = CubicBasis::new(0.0, 1.0, 4).unwrap();
        let row = b.eval(0.5);
        let oracle: Vec<f64> = (0..4).map(|i| cox_de_boor(b.knots(), i, 3, 0.5)).collect();
        for (a, o) in row.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-15);
        }
        assert!((row[0] - row[3]).abs() < 1e-15 && (row[1] - row[2]).abs() < 1e-15);
        // uniform cubic B-spline at the centre of a span: 1/48, 23/48, 23/48, 1/48
        assert!((row[0] - 1.0 / 48.0).abs() < 1e-15 && (row[1] - 23.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_recursion_on_interior_points() {
        let b = CubicBasis::new(1.0, 36.0, 10).unwrap();
        for k in 0..200 {
            let x = 1.0 + 35.0 * k as f64 / 200.0;
            let row = b.eval(x);
            for (i, v) in row.iter().enumerate() {
                assert!((v - cox_de_boor(b.knots(), i, 3, x)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn second_order_penalty_stencil_and_nullspace() {
        let s = difference_penalty(4, 2);
        // D = [[1,-2,1,0],[0,1,-2,1]]
        let want = [[1.0, -2.0, 1.0, 0.0], [-2.0, 5.0, -4.0, 1.0], [1.0, -4.0, 5.0, -2.0], [0.0, 1.0, -2.0, 1.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s[[i, j]], want[i][j]);
            }
        }
        let s10 = difference_penalty(10, 2);
        let beta: Vec<f64> = (0..10).map(|i| 3.0 - 0.7 * i as f64).collect();
        let beta = ndarray::Array1::from(beta);
        assert!(beta.dot(&s10.dot(&beta)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(CubicBasis::new(1.0, 1.0, 5), Err(Error::InvalidRange { .. })));
        assert!(matches!(CubicBasis::new(0.0, 1.0, 3), Err(Error::DimTooSmall(3))));
    }

    #[test]
    fn sum_to_zero_removes_constraint_direction() {
        let c = [3.0, 1.0, 0.5, 2.0];
        let z = SumToZero::new(&c);
        let gamma = [0.3, -1.2, 0.8];
        let full = z.expand_coefficients(&gamma);
        let dot: f64 = full.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-14);
        let mut raw = [1.0, 2.0, 3.0, 4.0];
        let mut out = [0.0; 3];
        z.apply_row(&mut raw.clone(), &mut out);
        // row · gamma equals raw row · expanded coefficients
        let lhs: f64 = out.iter().zip(&gamma).map(|(a, b)| a * b).sum();
        let rhs: f64 = raw.iter_mut().zip(&full).map(|(a, b)| *a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
