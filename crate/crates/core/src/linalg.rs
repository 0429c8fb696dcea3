//! Small dense and banded linear solvers.

use nalgebra::{DMatrix, DVector};

/// Solves the row-major `n x n` system `a x = b` by LU; `None` if singular.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let rhs = DVector::from_column_slice(b);
    let x = m.lu().solve(&rhs)?;
    x.iter()
        .all(|v| v.is_finite())
        .then(|| x.iter().copied().collect())
}

/// Symmetric banded matrix stored by lower diagonals: `band[d][i] = A[i + d][i]`.
#[derive(Debug, Clone)]
pub struct SymBand {
    pub n: usize,
    pub band: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        SymBand {
            n,
            band: (0..=bandwidth)
                .map(|d| vec![0.0; n.saturating_sub(d)])
                .collect(),
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.band.len() - 1
    }

    /// Adds `v` to `A[i][j]` (and `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.band[hi - lo][lo] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.band.get(hi - lo).map_or(0.0, |d| d[lo])
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (d, diag) in self.band.iter().enumerate() {
            for (i, &v) in diag.iter().enumerate() {
                y[i + d] += v * x[i];
                if d > 0 {
                    y[i] += v * x[i + d];
                }
            }
        }
        y
    }

    /// Banded Cholesky solve; `None` if the matrix is not positive definite.
    pub fn cholesky_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let w = self.bandwidth();
        // l[i][k] = L[i][i - w + k] for the row window
        let mut l = vec![0.0; n * (w + 1)];
        let idx = |i: usize, j: usize| i * (w + 1) + (j + w - i);
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                let mut s = self.get(i, j);
                let k0 = j0.max(j.saturating_sub(w));
                for k in k0..j {
                    s -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[idx(i, i)] = s.sqrt();
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            let mut s = y[i];
            for j in j0..i {
                s -= l[idx(i, j)] * y[j];
            }
            y[i] = s / l[idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..(i + w + 1).min(n) {
                s -= l[idx(j, i)] * y[j];
            }
            y[i] = s / l[idx(i, i)];
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve() {
        let x = solve_dense(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_dense(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn banded_cholesky_matches_dense() {
        let n = 12;
        let mut a = SymBand::zeros(n, 3);
        for i in 0..n {
            a.add(i, i, 6.0 + i as f64 * 0.1);
            for d in 1..=3 {
                if i + d < n {
                    a.add(i + d, i, -1.0 / d as f64);
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = a.cholesky_solve(&b).unwrap();
        let r = a.mul(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let mut bad = SymBand::zeros(2, 1);
        bad.add(0, 0, 1.0);
        bad.add(1, 1, 1.0);
        bad.add(1, 0, 2.0);
        assert!(bad.cholesky_solve(&[1.0, 1.0]).is_none());
    }
}
