//! Uniformly sampled functions on `[0, T]` and the functionals evaluated on them:
//! the energy `F`, the window constraint `Bu(x) = int_x^{x+1} u`, the contact
//! set, the Euler-Lagrange residual and the pseudo-Hamiltonian
//! `H = -a(u)u'^2 + b(u) - g u`.
//!
//! Unit windows are only evaluated on grids where the window length is an
//! integer number of cells, so that `Bu` is a difference of partial sums of
//! trapezoid cell integrals and `d/dx Bu = u(x+1) - u(x)` holds discretely.

use std::fmt::Write as _;

use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::contact_structure::ContactStructure;
use crate::error::{Error, Result};
use crate::profile::PiecewiseConstant;

const ALIGN_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    t_len: f64,
    values: Vec<f64>,
}

/// Closed interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }
}

/// Smallest `m` in `[min_m, max_m]` such that both `1` and `T` are multiples of `1/m`.
pub fn aligned_cells_per_unit(t_len: f64, min_m: usize, max_m: usize) -> Option<usize> {
    (min_m.max(1)..=max_m).find(|&m| {
        let n = t_len * m as f64;
        (n - n.round()).abs() < ALIGN_EPS
    })
}

impl GridFunction {
    pub fn new(t_len: f64, values: Vec<f64>) -> Result<Self> {
        if !(t_len > 0.0) || !t_len.is_finite() {
            return Err(Error::InvalidGrid(format!("domain length {t_len}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidGrid("need at least one cell".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GridFunction { t_len, values })
    }

    /// Samples `f` at `n + 1` equispaced nodes.
    pub fn from_fn(t_len: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = t_len / n as f64;
        Self::new(t_len, (0..=n).map(|i| f(i as f64 * dx)).collect())
    }

    pub fn constant(t_len: f64, n: usize, c: f64) -> Result<Self> {
        Self::new(t_len, vec![c; n + 1])
    }

    pub fn t_len(&self) -> f64 {
        self.t_len
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.t_len / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.dx();
        (0..self.values.len()).map(move |i| i as f64 * dx)
    }

    /// Number of cells in a unit window, if the grid resolves it exactly.
    pub fn cells_per_unit(&self) -> Option<usize> {
        let m = 1.0 / self.dx();
        let r = m.round();
        ((m - r).abs() < ALIGN_EPS * m.max(1.0) && r >= 1.0).then_some(r as usize)
    }

    /// Grid requirements for solver use: `n >= 16`, `dx <= 1/4`, unit windows aligned.
    pub fn check_solver_grid(&self) -> Result<usize> {
        if self.n() < 16 || self.dx() > 0.25 {
            return Err(Error::InvalidGrid(format!(
                "n = {} cells with dx = {} is too coarse",
                self.n(),
                self.dx()
            )));
        }
        self.cells_per_unit().ok_or(Error::MisalignedGrid {
            t_len: self.t_len,
            n: self.n(),
        })
    }

    /// Linear interpolation; clamps outside `[0, T]`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = (x / self.dx()).clamp(0.0, self.n() as f64);
        let i = (s.floor() as usize).min(self.n() - 1);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// `u'` by central differences, one-sided second order at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let v = &self.values;
        let n = self.n();
        let dx = self.dx();
        let mut d = vec![0.0; n + 1];
        if n == 1 {
            let s = (v[1] - v[0]) / dx;
            return vec![s, s];
        }
        for i in 1..n {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
        }
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
        d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dx);
        d
    }

    /// `u''` by the three-point stencil at interior nodes; end values are copied inward.
    pub fn second_derivative(&self) -> Vec<f64> {
        let v = &self.values;
        let n = self.n();
        let dx2 = self.dx() * self.dx();
        let mut d = vec![0.0; n + 1];
        for i in 1..n {
            d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / dx2;
        }
        if n >= 2 {
            d[0] = d[1];
            d[n] = d[n - 1];
        }
        d
    }

    /// The reflection `x -> T - x`.
    pub fn reflect(&self) -> GridFunction {
        let mut values = self.values.clone();
        values.reverse();
        GridFunction {
            t_len: self.t_len,
            values,
        }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete energy: trapezoid rule for `b`, per-cell slope and averaged `a` for `a u'^2`.
pub fn energy(u: &GridFunction, model: &CoefficientModel) -> f64 {
    let dx = u.dx();
    u.values
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / dx;
            let a = 0.5 * (model.a(w[0]) + model.a(w[1]));
            let b = 0.5 * (model.b(w[0]) + model.b(w[1]));
            dx * (a * d * d + b)
        })
        .sum()
}

/// Partial sums of trapezoid cell integrals: `S[k] = int_0^{x_k} u`.
pub fn cumulative_integral(u: &GridFunction) -> Vec<f64> {
    let dx = u.dx();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(u.values.len());
    out.push(0.0);
    for w in u.values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// `Bu(x_j) = int_{x_j}^{x_j + 1} u` on the nodes of `[0, T - 1]`.
pub fn constraint_profile(u: &GridFunction) -> Result<GridFunction> {
    if u.t_len <= 1.0 {
        return Err(Error::DomainTooShort(u.t_len));
    }
    let m = u.cells_per_unit().ok_or(Error::MisalignedGrid {
        t_len: u.t_len,
        n: u.n(),
    })?;
    let s = cumulative_integral(u);
    let nw = u.n() - m;
    let values = (0..=nw).map(|j| s[j + m] - s[j]).collect::<Vec<_>>();
    if values.len() < 2 {
        return Err(Error::InvalidGrid(
            "window profile needs at least one cell".into(),
        ));
    }
    GridFunction::new(u.t_len - 1.0, values)
}

/// Default contact tolerance `1e-7 * max(1, |Bu|_inf)`.
pub fn default_contact_tol(bu: &GridFunction) -> f64 {
    1e-7 * bu.sup_norm().max(1.0)
}

/// Maximal intervals where `Bu <= tol`; runs separated by at most `merge_cells`
/// cells are joined.
pub fn contact_set_with_merge(
    u: &GridFunction,
    tol: f64,
    merge_cells: usize,
) -> Result<Vec<Interval>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contact tolerance must be positive, got {tol}"
        )));
    }
    let bu = constraint_profile(u)?;
    let dx = bu.dx();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (j, &v) in bu.values.iter().enumerate() {
        if v <= tol {
            match runs.last_mut() {
                Some(last) if j - last.1 <= merge_cells.max(1) => last.1 = j,
                _ => runs.push((j, j)),
            }
        }
    }
    Ok(runs
        .into_iter()
        .map(|(a, b)| Interval {
            start: a as f64 * dx,
            end: b as f64 * dx,
        })
        .collect())
}

/// Contact set with runs separated by a single non-contact node merged.
pub fn contact_set(u: &GridFunction, tol: f64) -> Result<Vec<Interval>> {
    contact_set_with_merge(u, tol, 2)
}

/// Pointwise residual of the Euler-Lagrange equation.
#[derive(Debug, Clone)]
pub struct Residual {
    pub values: GridFunction,
    /// False at the two boundary nodes and within one cell of excluded points.
    pub included: Vec<bool>,
}

impl Residual {
    pub fn sup_norm(&self) -> f64 {
        self.values
            .values()
            .iter()
            .zip(&self.included)
            .filter(|(_, &inc)| inc)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }
}

fn near_any(x: f64, points: &[f64], radius: f64) -> bool {
    points.iter().any(|&p| (x - p).abs() <= radius)
}

/// `-2a(u)u'' - a'(u)u'^2 + b'(u) - g(x)` at interior nodes.
///
/// Nodes within one cell of a point in `exclude` (the jump points of `g`) are
/// masked out.
pub fn el_residual(
    u: &GridFunction,
    model: &CoefficientModel,
    g: impl Fn(f64) -> f64,
    exclude: &[f64],
) -> Residual {
    let up = u.derivative();
    let upp = u.second_derivative();
    let n = u.n();
    let dx = u.dx();
    let radius = dx * (1.0 + 1e-9);
    let mut values = vec![0.0; n + 1];
    let mut included = vec![false; n + 1];
    for i in 1..n {
        let x = i as f64 * dx;
        values[i] = model.el_operator(u.values[i], up[i], upp[i]) - g(x);
        included[i] = !near_any(x, exclude, radius);
    }
    Residual {
        values: GridFunction {
            t_len: u.t_len,
            values,
        },
        included,
    }
}

/// Statistics of `H` on one interval where `g` is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianSegment {
    pub start: f64,
    pub end: f64,
    pub g: f64,
    pub h_mean: f64,
    pub max_dev: f64,
    pub samples: usize,
}

/// Pointwise `H = -a(u)u'^2 + b(u) - g u`.
pub fn hamiltonian_values(
    u: &GridFunction,
    model: &CoefficientModel,
    g: &PiecewiseConstant,
) -> Vec<f64> {
    let up = u.derivative();
    u.values
        .iter()
        .zip(&up)
        .enumerate()
        .map(|(i, (&v, &d))| -model.a(v) * d * d + model.b(v) - g.eval(u.x(i)) * v)
        .collect()
}

/// Mean and maximal deviation of `H` on each constancy interval of `g`.
/// Nodes within one cell of a jump are skipped.
pub fn hamiltonian_profile(
    u: &GridFunction,
    model: &CoefficientModel,
    g: &PiecewiseConstant,
) -> Vec<HamiltonianSegment> {
    let h = hamiltonian_values(u, model, g);
    let dx = u.dx();
    let radius = dx * (1.0 + 1e-9);
    g.segments(0.0, u.t_len)
        .into_iter()
        .filter(|s| s.1 > s.0)
        .map(|(start, end, gv)| {
            let samples: Vec<f64> = (0..=u.n())
                .filter(|&i| {
                    let x = i as f64 * dx;
                    x > start + radius && x < end - radius
                })
                .map(|i| h[i])
                .collect();
            let (h_mean, max_dev) = if samples.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                let dev = samples.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
                (mean, dev)
            };
            HamiltonianSegment {
                start,
                end,
                g: gv,
                h_mean,
                max_dev,
                samples: samples.len(),
            }
        })
        .collect()
}

/// Distinct `(g, H)` pairs among the sampled segments, merged within `tol`.
pub fn distinct_pairs(segments: &[HamiltonianSegment], tol: f64) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for s in segments.iter().filter(|s| s.samples > 0) {
        if !pairs
            .iter()
            .any(|&(g, h)| (g - s.g).abs() <= tol && (h - s.h_mean).abs() <= tol)
        {
            pairs.push((s.g, s.h_mean));
        }
    }
    pairs
}

/// Diagnostics of a shooting solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveInfo {
    /// `u'(0)`.
    pub slope0: f64,
    /// Sup norm of the final shooting residuals.
    pub shooting_residual: f64,
    pub iterations: usize,
    /// Plateau shift used by continuation; zero for unsmoothed solves.
    pub beta: f64,
    /// Length of the reduced domain that was integrated.
    pub reduced_length: f64,
}

/// A solved configuration together with its diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    pub structure: Option<ContactStructure>,
    /// Right-hand side `g` of the Euler-Lagrange equation.
    pub rhs: PiecewiseConstant,
    /// Energy integrated along the shooting trajectory (fourth order).
    pub energy: f64,
    pub hamiltonian_segments: Vec<HamiltonianSegment>,
    /// Finite-difference EL residual away from the jumps of `g`.
    pub residual_norm: f64,
    pub info: SolveInfo,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionManifest {
    #[serde(rename = "T")]
    pub t_len: f64,
    pub x0: Option<f64>,
    #[serde(rename = "G")]
    pub g_total: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub energy: f64,
    pub residual_norm: f64,
    #[serde(rename = "H_segments")]
    pub h_segments: Vec<HamiltonianSegment>,
}

impl Solution {
    pub fn manifest(&self) -> SolutionManifest {
        let s = self.structure.as_ref();
        SolutionManifest {
            t_len: self.u.t_len(),
            x0: s.map(|s| s.x0()),
            g_total: s.map(|s| s.g_total()),
            g1: s.map(|s| s.g1()),
            g2: s.map(|s| s.g2()),
            energy: self.energy,
            residual_norm: self.residual_norm,
            h_segments: self.hamiltonian_segments.clone(),
        }
    }

    /// Jump points of `g` inside the domain.
    pub fn jumps(&self) -> Vec<f64> {
        self.rhs.breaks().to_vec()
    }

    pub fn residual(&self, model: &CoefficientModel) -> Residual {
        let jumps = self.jumps();
        el_residual(&self.u, model, |x| self.rhs.eval(x), &jumps)
    }
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with columns `x,u,uprime,Bu,g,residual`. `Bu` is empty past `T - 1`;
/// masked residual nodes are empty.
pub fn grid_csv(u: &GridFunction, model: &CoefficientModel, g: &PiecewiseConstant) -> String {
    let up = u.derivative();
    let bu = constraint_profile(u).ok();
    let res = el_residual(u, model, |x| g.eval(x), g.breaks());
    let mut out = String::from("x,u,uprime,Bu,g,residual\n");
    for i in 0..=u.n() {
        let x = u.x(i);
        let bu_s = bu
            .as_ref()
            .and_then(|b| b.values().get(i).copied())
            .map(fmt_f64)
            .unwrap_or_default();
        let res_s = if res.included[i] {
            fmt_f64(res.values.values()[i])
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(u.values[i]),
            fmt_f64(up[i]),
            bu_s,
            fmt_f64(g.eval(x)),
            res_s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn energy_of_constants() {
        let m = CoefficientModel::simple();
        let one = GridFunction::constant(3.0, 48, 1.0).unwrap();
        assert_abs_diff_eq!(energy(&one, &m), 6.0, epsilon = 1e-12);
        let minus = GridFunction::constant(3.0, 48, -1.0).unwrap();
        assert_abs_diff_eq!(energy(&minus, &m), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_of_linear_profile() {
        // int_0^2 [1/2 + (2 - x)^2 / 2] dx = 1 + 4/3
        let m = CoefficientModel::simple();
        let u = GridFunction::from_fn(2.0, 2048, |x| 1.0 - x).unwrap();
        assert_abs_diff_eq!(energy(&u, &m), 1.0 + 4.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn energy_reflection_invariant() {
        let m = CoefficientModel::rod(1.0, 0.3).unwrap();
        let u = GridFunction::from_fn(4.0, 256, |x| (3.0 * x).sin() + 0.2 * x).unwrap();
        assert_abs_diff_eq!(energy(&u, &m), energy(&u.reflect(), &m), epsilon = 1e-12);
    }

    #[test]
    fn window_profiles() {
        let one = GridFunction::constant(3.0, 96, 1.0).unwrap();
        let b = constraint_profile(&one).unwrap();
        assert_abs_diff_eq!(b.t_len(), 2.0);
        assert!(b.values().iter().all(|v| (v - 1.0).abs() < 1e-13));

        let s = GridFunction::from_fn(3.0, 300, |x| (2.0 * PI * x).sin()).unwrap();
        assert!(constraint_profile(&s).unwrap().sup_norm() < 1e-12);

        // int_x^{x+1} (y - 1) dy = x - 1/2, exact for linear u
        let lin = GridFunction::from_fn(3.0, 60, |x| x - 1.0).unwrap();
        let b = constraint_profile(&lin).unwrap();
        for (j, v) in b.values().iter().enumerate() {
            assert_abs_diff_eq!(*v, b.x(j) - 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn window_errors() {
        let short = GridFunction::constant(1.0, 16, 1.0).unwrap();
        assert_eq!(
            constraint_profile(&short).unwrap_err(),
            Error::DomainTooShort(1.0)
        );
        let mis = GridFunction::constant(3.0, 100, 1.0).unwrap();
        assert!(matches!(
            constraint_profile(&mis),
            Err(Error::MisalignedGrid { .. })
        ));
    }

    #[test]
    fn window_derivative_identity() {
        let u = GridFunction::from_fn(5.0, 500, |x| (1.7 * x).cos() * (0.3 * x).exp()).unwrap();
        let b = constraint_profile(&u).unwrap();
        let m = u.cells_per_unit().unwrap();
        let dx = u.dx();
        for j in 0..b.n() {
            let fd = (b.values()[j + 1] - b.values()[j]) / dx;
            let avg_diff = 0.5
                * ((u.values()[j + m] - u.values()[j])
                    + (u.values()[j + m + 1] - u.values()[j + 1]));
            assert_abs_diff_eq!(fd, avg_diff, epsilon = 1e-12);
        }
    }

    #[test]
    fn contact_sets() {
        let one = GridFunction::constant(3.0, 96, 1.0).unwrap();
        assert!(contact_set(&one, 1e-8).unwrap().is_empty());
        let s = GridFunction::from_fn(3.0, 300, |x| (2.0 * PI * x).sin()).unwrap();
        let c = contact_set(&s, 1e-8).unwrap();
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c[0].start, 0.0);
        assert_abs_diff_eq!(c[0].end, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_of_equilibrium() {
        let m = CoefficientModel::simple();
        let u = GridFunction::constant(4.0, 64, -1.0).unwrap();
        let r = el_residual(&u, &m, |_| 0.0, &[]);
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn manufactured_residual_is_second_order() {
        // g := -u'' + u + 1 evaluated in closed form
        let m = CoefficientModel::simple();
        let exact = |x: f64| (1.3 * x).sin() + 0.5 * x * x;
        let g = |x: f64| 1.69 * (1.3 * x).sin() - 1.0 + exact(x) + 1.0;
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let u = GridFunction::from_fn(2.0, n, exact).unwrap();
                el_residual(&u, &m, g, &[]).sup_norm()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
        }
    }

    #[test]
    fn hamiltonian_of_constant() {
        let m = CoefficientModel::simple();
        let u = GridFunction::constant(4.0, 64, 0.3).unwrap();
        let segs = hamiltonian_profile(&u, &m, &PiecewiseConstant::constant(0.0));
        assert_eq!(segs.len(), 1);
        assert_abs_diff_eq!(segs[0].h_mean, m.b(0.3), epsilon = 1e-14);
        assert!(segs[0].max_dev < 1e-14);
    }

    #[test]
    fn alignment_search() {
        assert_eq!(aligned_cells_per_unit(4.91635, 200, 100_000), Some(20_000));
        assert_eq!(aligned_cells_per_unit(10.0, 64, 1000), Some(64));
        assert_eq!(aligned_cells_per_unit(2.5, 3, 1000), Some(4));
        assert_eq!(aligned_cells_per_unit(std::f64::consts::PI, 1, 1000), None);
    }

    #[test]
    fn csv_layout() {
        let m = CoefficientModel::simple();
        let u = GridFunction::constant(2.0, 16, 1.0).unwrap();
        let csv = grid_csv(&u, &m, &PiecewiseConstant::constant(0.0));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,u,uprime,Bu,g,residual");
        assert_eq!(lines.len(), 18);
        let last: Vec<&str> = lines[17].split(',').collect();
        assert_eq!(last[3], "");
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    }
}
