use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Right-continuous piecewise-constant function on the real line.
///
/// `values[0]` holds left of `breaks[0]`, `values[k]` on `[breaks[k-1], breaks[k])`
/// and `values[breaks.len()]` right of the last break.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    /// Panics unless `values.len() == breaks.len() + 1` and breaks are non-decreasing.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), breaks.len() + 1, "one more value than breaks");
        assert!(
            breaks.windows(2).all(|w| w[0] <= w[1]),
            "breaks must be sorted"
        );
        PiecewiseConstant { breaks, values }
    }

    pub fn constant(v: f64) -> Self {
        PiecewiseConstant {
            breaks: Vec::new(),
            values: vec![v],
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= x);
        self.values[k]
    }

    /// Each Heaviside step replaced by `1/2 + atan(A (x - b)) / pi`.
    pub fn smoothed(&self, x: f64, steepness: f64) -> f64 {
        let mut acc = self.values[0];
        for (k, &b) in self.breaks.iter().enumerate() {
            let jump = self.values[k + 1] - self.values[k];
            if jump != 0.0 {
                acc += jump * (0.5 + (steepness * (x - b)).atan() / PI);
            }
        }
        acc
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return -self.integral(hi, lo);
        }
        let mut acc = 0.0;
        let mut left = lo;
        for (k, &b) in self.breaks.iter().enumerate() {
            if b <= left {
                continue;
            }
            let right = b.min(hi);
            acc += self.values[k] * (right - left);
            left = right;
            if left >= hi {
                return acc;
            }
        }
        acc + self.values[self.breaks.len()] * (hi - left)
    }

    /// Maximal intervals of constancy restricted to `[lo, hi]`, as `(start, end, value)`.
    pub fn segments(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut left = lo;
        for (k, &b) in self.breaks.iter().enumerate() {
            if b <= left {
                continue;
            }
            let right = b.min(hi);
            out.push((left, right, self.values[k]));
            left = right;
            if left >= hi {
                return out;
            }
        }
        if left < hi {
            out.push((left, hi, self.values[self.breaks.len()]));
        }
        out
    }
}
