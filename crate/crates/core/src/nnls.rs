//! Lawson-Hanson non-negative least squares for sparse column matrices.

use nalgebra::{DMatrix, DVector};

/// Column-sparse matrix: `cols[j]` lists `(row, value)` pairs.
#[derive(Debug, Clone)]
pub struct SparseColumns {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
}

impl SparseColumns {
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (col, &xj) in self.cols.iter().zip(x) {
            if xj != 0.0 {
                for &(i, v) in col {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    pub fn mul_t(&self, r: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|col| col.iter().map(|&(i, v)| v * r[i]).sum()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub x: Vec<f64>,
    /// `||A x - b||_2`.
    pub residual: f64,
    pub iterations: usize,
}

fn solve_passive(a: &SparseColumns, b: &[f64], passive: &[usize]) -> Option<Vec<f64>> {
    let mut m = DMatrix::zeros(a.rows, passive.len());
    for (k, &j) in passive.iter().enumerate() {
        for &(i, v) in &a.cols[j] {
            m[(i, k)] = v;
        }
    }
    let rhs = DVector::from_column_slice(b);
    let svd = m.svd(true, true);
    let z = svd.solve(&rhs, 1e-12).ok()?;
    Some(z.iter().copied().collect())
}

/// `min ||A x - b||` subject to `x >= 0`.
pub fn nnls(a: &SparseColumns, b: &[f64], max_iter: usize) -> NnlsResult {
    let n = a.cols.len();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let scale = a.mul_t(b).iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut iterations = 0;
    loop {
        let r: Vec<f64> = a.mul(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let w = a.mul_t(&r);
        let pick = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j_new) = pick else { break };
        if iterations >= max_iter {
            break;
        }
        passive[j_new] = true;
        loop {
            iterations += 1;
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let Some(z) = solve_passive(a, b, &idx) else {
                passive[j_new] = false;
                break;
            };
            if z.iter().all(|&v| v > 0.0) {
                for (&j, &v) in idx.iter().zip(&z) {
                    x[j] = v;
                }
                break;
            }
            // step back towards the feasible region
            let mut alpha = 1.0f64;
            for (&j, &v) in idx.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - v));
                }
            }
            for (&j, &v) in idx.iter().zip(&z) {
                x[j] += alpha * (v - x[j]);
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if iterations >= max_iter {
                break;
            }
        }
    }
    let residual = a.mul(&x).iter().zip(b).map(|(ax, bi)| (ax - bi).powi(2)).sum::<f64>().sqrt();
    NnlsResult { x, residual, iterations }
}
