//! Small dense linear algebra kernels: Householder thin QR, Cholesky and
//! triangular solves.

use ndarray::{Array1, Array2, ShapeBuilder};

/// `X = Q R` with `Q` (n × m) orthonormal columns and `R` (m × m) upper
/// triangular with non-negative diagonal.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Array2<f64>,
    pub r: Array2<f64>,
}

/// Householder QR without pivoting. Requires `n >= m`.
pub fn thin_qr(x: &Array2<f64>) -> ThinQr {
    let (n, m) = x.dim();
    assert!(n >= m, "thin QR needs at least as many rows as columns");
    // column-major working copy; Householder vector j overwrites a[j][j..]
    let mut a: Vec<Vec<f64>> = (0..m).map(|j| x.column(j).to_vec()).collect();
    let mut rdiag = vec![0.0; m];
    let mut betas = vec![0.0; m];

    for j in 0..m {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            rdiag[j] = 0.0;
            betas[j] = 0.0;
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        a[j][j] -= alpha;
        let beta: f64 = a[j][j..].iter().map(|v| v * v).sum();
        rdiag[j] = alpha;
        betas[j] = beta;
        let (head, tail) = a.split_at_mut(j + 1);
        let v = &head[j][j..];
        for col in tail.iter_mut() {
            reflect(v, beta, &mut col[j..]);
        }
    }

    let mut r = Array2::zeros((m, m));
    for j in 0..m {
        r[[j, j]] = rdiag[j];
        for k in (j + 1)..m {
            r[[j, k]] = a[k][j];
        }
    }

    let mut qdata = vec![0.0; n * m];
    for k in 0..m {
        qdata[k * n + k] = 1.0;
    }
    for j in (0..m).rev() {
        if betas[j] == 0.0 {
            continue;
        }
        let v = &a[j][j..];
        for k in 0..m {
            reflect(v, betas[j], &mut qdata[k * n + j..(k + 1) * n]);
        }
    }
    let mut q = Array2::from_shape_vec((n, m).f(), qdata).expect("shape");

    for j in 0..m {
        if r[[j, j]] < 0.0 {
            r.row_mut(j).mapv_inplace(|v| -v);
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    ThinQr { q, r }
}

#[inline]
fn reflect(v: &[f64], beta: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let s = 2.0 * dot / beta;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= s * vi;
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solves `R x = b` for upper triangular `R`.
pub fn solve_upper(r: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = r.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= r[[i, k]] * x[k];
        }
        x[i] = s / r[[i, i]];
    }
    x
}

pub fn max_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}
