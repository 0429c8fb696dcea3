//! Direct minimization of the discretized energy under window constraints.
//!
//! `u` is piecewise linear on a uniform grid with `m` cells per unit length,
//! so every window integral `B_j = int_{x_j}^{x_j+1} u` is an exact trapezoid
//! sum. The constraints are handled by an augmented Lagrangian:
//!
//! ```text
//! L(u) = F(u) + 1/(2 rho) sum_j [ max(0, lambda_j - rho B_j)^2 - lambda_j^2 ]
//! ```
//!
//! The inner problems are solved by damped Newton steps on the banded
//! Hessian. At convergence `lambda_j` is the weight of the contact force
//! concentrated at `x_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bvp::{solve_unconstrained, SolverOptions};
use crate::coefficients::CoefficientModel;
use crate::contact_structure::ContactStructure;
use crate::error::{Error, Result};
use crate::gridfn::{el_residual, energy, GridFunction};
use crate::linalg::SymBand;
use crate::nnls::{nnls, SparseColumns};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    None,
    /// `B_j >= 0` at every window start.
    Inequality,
    /// `B_j = 0` at every window start.
    Equality,
}

#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub model: CoefficientModel,
    pub t_len: f64,
    /// Number of cells.
    pub n: usize,
    /// Cells per unit length.
    pub m: usize,
    pub boundary: (f64, f64),
    pub constraint: ConstraintKind,
    /// Restrict to `u(x) = u(T - x)`.
    pub symmetric: bool,
    pub penalty0: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl DiscreteProblem {
    /// Problem on `[0, T]` with `m` cells per unit; `T m` must be an integer.
    pub fn new(model: CoefficientModel, t_len: f64, m: usize, constraint: ConstraintKind) -> Result<Self> {
        let n_real = t_len * m as f64;
        let n = n_real.round() as usize;
        if m == 0 || (n_real - n as f64).abs() > 1e-8 || n < 4 {
            return Err(Error::MisalignedGrid { t_len, n });
        }
        if constraint != ConstraintKind::None && t_len < 1.0 {
            return Err(Error::DomainTooShort(t_len));
        }
        Ok(DiscreteProblem {
            model,
            t_len,
            n,
            m,
            boundary: (1.0, 1.0),
            constraint,
            symmetric: false,
            penalty0: 10.0,
            max_outer: 40,
            max_inner: 200,
        })
    }

    pub fn dx(&self) -> f64 {
        self.t_len / self.n as f64
    }

    pub fn constrained(&self) -> bool {
        self.constraint != ConstraintKind::None
    }

    /// Number of window constraints, one per node in `[0, T - 1]`.
    pub fn n_windows(&self) -> usize {
        if self.constrained() {
            self.n - self.m + 1
        } else {
            0
        }
    }

    /// Node to unknown index; boundary nodes are fixed.
    fn unknown_map(&self) -> (Vec<Option<usize>>, usize) {
        let n = self.n;
        let mut map = vec![None; n + 1];
        if self.symmetric {
            for i in 1..n {
                let k = i.min(n - i);
                map[i] = Some(k - 1);
            }
            (map, n / 2)
        } else {
            for (i, slot) in map.iter_mut().enumerate().take(n).skip(1) {
                *slot = Some(i - 1);
            }
            (map, n - 1)
        }
    }

    fn expand(&self, map: &[Option<usize>], v: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = map.iter().map(|k| k.map_or(0.0, |k| v[k])).collect();
        u[0] = self.boundary.0;
        u[self.n] = self.boundary.1;
        u
    }

    fn restrict(&self, map: &[Option<usize>], u: &[f64], nv: usize) -> Vec<f64> {
        let mut v = vec![0.0; nv];
        let mut count = vec![0usize; nv];
        for (i, k) in map.iter().enumerate() {
            if let Some(k) = *k {
                v[k] += u[i];
                count[k] += 1;
            }
        }
        v.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
    }

    /// Window integrals `B_j` for `j = 0..=n - m`.
    pub fn windows(&self, u: &[f64]) -> Vec<f64> {
        if !self.constrained() {
            return Vec::new();
        }
        let dx = self.dx();
        let mut prefix = vec![0.0; u.len() + 1];
        for (i, &v) in u.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        (0..self.n_windows())
            .map(|j| dx * (prefix[j + self.m + 1] - prefix[j] - 0.5 * (u[j] + u[j + self.m])))
            .collect()
    }

    /// Gradient of the discrete energy with respect to every node value.
    pub fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        let dx = self.dx();
        let model = &self.model;
        let mut g = vec![0.0; u.len()];
        for i in 0..self.n {
            let (ul, ur) = (u[i], u[i + 1]);
            let d = (ur - ul) / dx;
            let asum = model.a(ul) + model.a(ur);
            g[i] += 0.5 * dx * model.da(ul) * d * d - asum * d + 0.5 * dx * model.db(ul);
            g[i + 1] += 0.5 * dx * model.da(ur) * d * d + asum * d + 0.5 * dx * model.db(ur);
        }
        g
    }

    /// Tridiagonal energy Hessian as `(diag, off)` with `off[i] = H[i][i+1]`.
    fn energy_hessian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dx = self.dx();
        let model = &self.model;
        let second = |f: &dyn Fn(f64) -> f64, x: f64| {
            let h = 1e-5 * x.abs().max(1.0);
            (f(x + h) - f(x - h)) / (2.0 * h)
        };
        let mut diag = vec![0.0; u.len()];
        let mut off = vec![0.0; self.n];
        for i in 0..self.n {
            let (ul, ur) = (u[i], u[i + 1]);
            let d = (ur - ul) / dx;
            let asum = model.a(ul) + model.a(ur);
            let (dal, dar) = (model.da(ul), model.da(ur));
            let ddal = second(&|x| model.da(x), ul);
            let ddar = second(&|x| model.da(x), ur);
            let ddbl = second(&|x| model.db(x), ul);
            let ddbr = second(&|x| model.db(x), ur);
            diag[i] += 0.5 * dx * ddal * d * d - 2.0 * dal * d + asum / dx + 0.5 * dx * ddbl;
            diag[i + 1] += 0.5 * dx * ddar * d * d + 2.0 * dar * d + asum / dx + 0.5 * dx * ddbr;
            off[i] += (dal - dar) * d - asum / dx;
        }
        (diag, off)
    }

    /// Trapezoid weight of node `k` in window `j`.
    fn window_weight(&self, j: usize, k: usize) -> f64 {
        if k < j || k > j + self.m {
            0.0
        } else if k == j || k == j + self.m {
            0.5
        } else {
            1.0
        }
    }

    /// `sum_j mu_j dB_j/du_k` for every node `k`.
    fn window_adjoint(&self, mu: &[f64]) -> Vec<f64> {
        let dx = self.dx();
        let mut prefix = vec![0.0; mu.len() + 1];
        for (j, &v) in mu.iter().enumerate() {
            prefix[j + 1] = prefix[j] + v;
        }
        let jmax = mu.len();
        (0..=self.n)
            .map(|k| {
                if jmax == 0 {
                    return 0.0;
                }
                let lo = k.saturating_sub(self.m);
                let hi = k.min(jmax - 1);
                if lo > hi {
                    return 0.0;
                }
                let mut s = prefix[hi + 1] - prefix[lo];
                if hi == k {
                    s -= 0.5 * mu[k];
                }
                if k >= self.m && lo == k - self.m {
                    s -= 0.5 * mu[k - self.m];
                }
                dx * s
            })
            .collect()
    }

    fn multiplier_estimate(&self, lambda: &[f64], rho: f64, bu: &[f64]) -> Vec<f64> {
        lambda
            .iter()
            .zip(bu)
            .map(|(&l, &b)| {
                let v = l - rho * b;
                match self.constraint {
                    ConstraintKind::Inequality => v.max(0.0),
                    _ => v,
                }
            })
            .collect()
    }

    fn merit(&self, u: &[f64], lambda: &[f64], rho: f64) -> f64 {
        let f = energy_of(&self.model, self.dx(), u);
        if !self.constrained() {
            return f;
        }
        let bu = self.windows(u);
        let mu = self.multiplier_estimate(lambda, rho, &bu);
        f + mu.iter().zip(lambda).map(|(m, l)| m * m - l * l).sum::<f64>() / (2.0 * rho)
    }

    fn merit_gradient(&self, u: &[f64], lambda: &[f64], rho: f64) -> Vec<f64> {
        let mut g = self.energy_gradient(u);
        if self.constrained() {
            let bu = self.windows(u);
            let mu = self.multiplier_estimate(lambda, rho, &bu);
            for (gk, ak) in g.iter_mut().zip(self.window_adjoint(&mu)) {
                *gk -= ak;
            }
        }
        g
    }

    /// Hessian of the merit function in unknown space.
    fn merit_hessian(&self, u: &[f64], lambda: &[f64], rho: f64, map: &[Option<usize>], nv: usize) -> SymBand {
        let bandwidth = if self.symmetric {
            nv.saturating_sub(1).max(1)
        } else if self.constrained() {
            self.m.min(nv.saturating_sub(1)).max(1)
        } else {
            1
        };
        let mut h = SymBand::zeros(nv, bandwidth);
        let mut put = |k: usize, l: usize, v: f64| {
            if let (Some(a), Some(b)) = (map[k], map[l]) {
                if k != l && a == b {
                    h.add(a, a, 2.0 * v);
                } else {
                    h.add(a, b, v);
                }
            }
        };
        let (diag, off) = self.energy_hessian(u);
        for k in 0..=self.n {
            put(k, k, diag[k]);
        }
        for k in 0..self.n {
            put(k, k + 1, off[k]);
        }
        if self.constrained() {
            let bu = self.windows(u);
            let active: Vec<bool> = lambda
                .iter()
                .zip(&bu)
                .map(|(&l, &b)| self.constraint == ConstraintKind::Equality || l - rho * b > 0.0)
                .collect();
            let mut prefix = vec![0usize; active.len() + 1];
            for (j, &a) in active.iter().enumerate() {
                prefix[j + 1] = prefix[j] + a as usize;
            }
            let jmax = active.len();
            let dx2 = self.dx() * self.dx();
            for k in 0..=self.n {
                for l in k..=(k + self.m).min(self.n) {
                    let lo = l.saturating_sub(self.m);
                    let hi = k.min(jmax - 1);
                    if lo > hi {
                        continue;
                    }
                    let mut s = (prefix[hi + 1] - prefix[lo]) as f64;
                    let mut specials = vec![k];
                    if l >= self.m && l - self.m != k {
                        specials.push(l - self.m);
                    }
                    for j in specials {
                        if j >= lo && j <= hi && active[j] {
                            s += self.window_weight(j, k) * self.window_weight(j, l) - 1.0;
                        }
                    }
                    if s != 0.0 {
                        put(k, l, rho * dx2 * s);
                    }
                }
            }
        }
        h
    }
}

fn energy_of(model: &CoefficientModel, dx: f64, u: &[f64]) -> f64 {
    u.windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / dx;
            dx * (0.5 * (model.a(w[0]) + model.a(w[1])) * d * d + 0.5 * (model.b(w[0]) + model.b(w[1])))
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// `||grad F - sum lambda grad B||_inf / dx`, in units of the Euler-Lagrange residual.
    pub stationarity: f64,
    /// `min_j B_j` (`+inf` without constraints).
    pub min_window: f64,
    /// `max_j |B_j|` for equality constraints, else `max(0, -min_j B_j)`.
    pub infeasibility: f64,
    pub complementarity: f64,
    pub min_multiplier: f64,
}

impl KktReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.stationarity < tol
            && self.infeasibility <= tol
            && self.complementarity < tol
            && self.min_multiplier >= -tol
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub u: GridFunction,
    /// Multiplier weights at `x_j = j dx`, `j = 0..=n - m`.
    pub multipliers: Vec<f64>,
    pub energy: f64,
    pub kkt: KktReport,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Whether every accepted inner step decreased the merit function.
    pub merit_monotone: bool,
}

impl MinimizeResult {
    pub fn multiplier_positions(&self) -> Vec<f64> {
        let dx = self.u.dx();
        (0..self.multipliers.len()).map(|j| j as f64 * dx).collect()
    }
}

/// Minimizes from `seed`; `tol` bounds every KKT measure.
pub fn minimize_direct(prob: &DiscreteProblem, seed: &GridFunction, tol: f64) -> Result<MinimizeResult> {
    if seed.n() != prob.n || (seed.t_len() - prob.t_len).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "seed has {} cells on [0, {}], problem needs {} on [0, {}]",
            seed.n(),
            seed.t_len(),
            prob.n,
            prob.t_len
        )));
    }
    let (map, nv) = prob.unknown_map();
    let mut v = prob.restrict(&map, seed.values(), nv);
    let mut lambda = vec![0.0; prob.n_windows()];
    let mut rho = prob.penalty0;
    let dx = prob.dx();
    let mut inner_total = 0;
    let mut monotone = true;

    for outer in 1..=prob.max_outer {
        let (its, mono) = inner_newton(prob, &map, nv, &mut v, &lambda, rho, 0.1 * tol * dx)?;
        inner_total += its;
        monotone &= mono;
        let u = prob.expand(&map, &v);
        let bu = prob.windows(&u);
        lambda = prob.multiplier_estimate(&lambda, rho, &bu);
        let kkt = kkt_report(prob, &map, nv, &u, &lambda, &bu);
        if kkt.satisfied(tol) || !prob.constrained() {
            if !prob.constrained() && kkt.stationarity >= tol {
                return Err(Error::MaxIterations(inner_total));
            }
            let grid = GridFunction::new(prob.t_len, u)?;
            return Ok(MinimizeResult {
                energy: energy(&grid, &prob.model),
                u: grid,
                multipliers: lambda,
                kkt,
                outer_iterations: outer,
                inner_iterations: inner_total,
                merit_monotone: monotone,
            });
        }
        rho = (rho * 10.0).min(1e8);
    }
    Err(Error::MaxIterations(prob.max_outer))
}

fn kkt_report(
    prob: &DiscreteProblem,
    map: &[Option<usize>],
    nv: usize,
    u: &[f64],
    lambda: &[f64],
    bu: &[f64],
) -> KktReport {
    let dx = prob.dx();
    let mut g = prob.energy_gradient(u);
    for (gk, ak) in g.iter_mut().zip(prob.window_adjoint(lambda)) {
        *gk -= ak;
    }
    let gv = fold_gradient(map, nv, &g);
    let stationarity = gv.iter().fold(0.0f64, |m, v| m.max(v.abs())) / dx;
    let min_window = bu.iter().copied().fold(f64::INFINITY, f64::min);
    let infeasibility = match prob.constraint {
        ConstraintKind::Equality => bu.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        ConstraintKind::Inequality => (-min_window).max(0.0),
        ConstraintKind::None => 0.0,
    };
    let complementarity = match prob.constraint {
        ConstraintKind::Inequality => lambda.iter().zip(bu).fold(0.0f64, |m, (l, b)| m.max((l * b).abs())),
        _ => 0.0,
    };
    let min_multiplier = match prob.constraint {
        ConstraintKind::Inequality => lambda.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
        _ => 0.0,
    };
    KktReport { stationarity, min_window, infeasibility, complementarity, min_multiplier }
}

fn fold_gradient(map: &[Option<usize>], nv: usize, g: &[f64]) -> Vec<f64> {
    let mut gv = vec![0.0; nv];
    for (k, m) in map.iter().enumerate() {
        if let Some(a) = *m {
            gv[a] += g[k];
        }
    }
    gv
}

/// Damped Newton on the merit function; returns iterations and whether the
/// merit decreased at every accepted step.
fn inner_newton(
    prob: &DiscreteProblem,
    map: &[Option<usize>],
    nv: usize,
    v: &mut Vec<f64>,
    lambda: &[f64],
    rho: f64,
    gtol: f64,
) -> Result<(usize, bool)> {
    let mut u = prob.expand(map, v);
    let mut merit = prob.merit(&u, lambda, rho);
    let mut monotone = true;
    for it in 0..prob.max_inner {
        let g = fold_gradient(map, nv, &prob.merit_gradient(&u, lambda, rho));
        let gnorm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !gnorm.is_finite() {
            return Err(Error::NonFinite);
        }
        if gnorm < gtol {
            return Ok((it, monotone));
        }
        let mut h = prob.merit_hessian(&u, lambda, rho, map, nv);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let scale = (0..nv).map(|i| h.get(i, i).abs()).fold(0.0f64, f64::max).max(1e-300);
        let mut shift = 0.0;
        let dir = loop {
            if let Some(d) = h.cholesky_solve(&rhs) {
                if d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                    break d;
                }
            }
            let next = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
            for i in 0..nv {
                h.add(i, i, next - shift);
            }
            shift = next;
            if shift > 1e10 * scale {
                return Err(Error::NoConvergence { iterations: it, residual: gnorm });
            }
        };
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let tu = prob.expand(map, &trial);
            let tm = prob.merit(&tu, lambda, rho);
            if tm.is_finite() && tm <= merit + 1e-4 * t * slope {
                monotone &= tm <= merit;
                *v = trial;
                u = tu;
                merit = tm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no further decrease at machine precision
            return Ok((it, monotone));
        }
    }
    Ok((prob.max_inner, monotone))
}

/// Smooth random profile with the problem's boundary values.
pub fn random_seed_profile(prob: &DiscreteProblem, rng: &mut impl Rng) -> GridFunction {
    let (l, r) = prob.boundary;
    let coeffs: Vec<f64> = (1..=6).map(|k| rng.gen_range(-1.5..1.5) / k as f64).collect();
    let t = prob.t_len;
    let mut u = GridFunction::from_fn(t, prob.n, |x| {
        let base = l + (r - l) * x / t;
        base + coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x / t).sin())
            .sum::<f64>()
    })
    .expect("problem grid is valid");
    if prob.symmetric {
        let v = u.values().to_vec();
        let n = prob.n;
        u = GridFunction::new(t, (0..=n).map(|i| 0.5 * (v[i] + v[n - i])).collect()).expect("same grid");
    }
    u
}

/// Best of `n_random` seeded random starts plus the unconstrained stationary
/// point (when it exists for the problem's boundary data). Starts run in parallel.
pub fn multistart(prob: &DiscreteProblem, n_random: usize, rng_seed: u64, tol: f64) -> Result<MinimizeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds: Vec<GridFunction> = (0..n_random).map(|_| random_seed_profile(prob, &mut rng)).collect();
    if prob.boundary == (1.0, 1.0) {
        if let Ok(sol) = solve_unconstrained(&prob.model, prob.t_len, &SolverOptions::default()) {
            let fine = &sol.u;
            if let Ok(g) = GridFunction::from_fn(prob.t_len, prob.n, |x| fine.interpolate(x)) {
                seeds.push(g);
            }
        }
    }
    let results: Vec<Result<MinimizeResult>> = seeds.par_iter().map(|s| minimize_direct(prob, s, tol)).collect();
    let mut best: Option<MinimizeResult> = None;
    let mut last_err = Error::MaxIterations(0);
    for r in results {
        match r {
            Ok(res) if best.as_ref().is_none_or(|b| res.energy < b.energy - 1e-12) => best = Some(res),
            Ok(_) => {}
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierRecovery {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    /// `||W f - g||_2` of the non-negative fit.
    pub fit_residual: f64,
    pub dx: f64,
}

impl MultiplierRecovery {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Share of the recovered mass within one cell of a predicted delta position.
    pub fn mass_near(&self, structure: &ContactStructure) -> f64 {
        let radius = self.dx * (1.0 + 1e-9);
        let near: f64 = self
            .positions
            .iter()
            .zip(&self.weights)
            .filter(|(&x, _)| structure.deltas().iter().any(|d| (d.pos - x).abs() <= radius))
            .map(|(_, w)| w)
            .sum();
        let total = self.total_mass();
        if total > 0.0 {
            near / total
        } else {
            1.0
        }
    }

    /// Recovered force summed over the window `(x - 1, x]`.
    pub fn window_sum(&self, x: f64) -> f64 {
        let eps = 1e-9 * self.dx;
        self.positions
            .iter()
            .zip(&self.weights)
            .filter(|(&p, _)| p > x - 1.0 + eps && p <= x + eps)
            .map(|(_, w)| w)
            .sum()
    }

    /// Assigns every weight to the nearest predicted delta and compares the
    /// resulting clusters with the deltas.
    pub fn clusters(&self, structure: &ContactStructure) -> Vec<Cluster> {
        let deltas = structure.deltas();
        let mut acc = vec![(0.0, 0.0); deltas.len()];
        for (&x, &w) in self.positions.iter().zip(&self.weights) {
            if w <= 0.0 {
                continue;
            }
            let nearest = (0..deltas.len())
                .min_by(|&a, &b| (deltas[a].pos - x).abs().total_cmp(&(deltas[b].pos - x).abs()));
            if let Some(k) = nearest {
                acc[k].0 += w;
                acc[k].1 += w * x;
            }
        }
        deltas
            .iter()
            .zip(acc)
            .map(|(d, (mass, moment))| Cluster {
                position: d.pos,
                weight: d.weight,
                mass,
                centroid: if mass > 0.0 { moment / mass } else { f64::NAN },
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cluster {
    /// Predicted delta position and weight.
    pub position: f64,
    pub weight: f64,
    /// Recovered mass nearest to this delta and its centre of mass.
    pub mass: f64,
    pub centroid: f64,
}

/// Contact tolerance for discrete minimizers: between multiplier nodes the
/// window integral of a discrete solution is only `O(dx^2)`-small.
pub fn discrete_contact_tol(dx: f64) -> f64 {
    1e-2 * dx * dx
}

/// Inverts the window map `g(x) = int_{x-1}^x f` for a non-negative discrete
/// `f` supported on `[0, T - 1]`, with `g` the Euler-Lagrange operator of `u`.
pub fn recover_multiplier(u: &GridFunction, model: &CoefficientModel) -> Result<MultiplierRecovery> {
    let m = u.check_solver_grid()?;
    let n = u.n();
    if n < m {
        return Err(Error::DomainTooShort(u.t_len()));
    }
    let g = el_residual(u, model, |_| 0.0, &[]);
    let rows: Vec<usize> = (1..n).collect();
    let b: Vec<f64> = rows.iter().map(|&i| g.values.values()[i]).collect();
    let cols: Vec<Vec<(usize, f64)>> = (0..=n - m)
        .map(|j| {
            (j..=j + m)
                .filter(|&i| i >= 1 && i < n)
                .map(|i| (i - 1, if i == j || i == j + m { 0.5 } else { 1.0 }))
                .collect()
        })
        .collect();
    let a = SparseColumns { rows: rows.len(), cols };
    let fit = nnls(&a, &b, 20 * (n - m + 1));
    let dx = u.dx();
    Ok(MultiplierRecovery {
        positions: (0..=n - m).map(|j| j as f64 * dx).collect(),
        weights: fit.x,
        fit_residual: fit.residual,
        dx,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryReport {
    pub alpha: f64,
    /// Discrete energy of `sin(2 pi x)`.
    pub f_sine: f64,
    /// `2 pi^2 + 3 alpha / 8`.
    pub f_sine_exact: f64,
    /// Minima under `int u >= 0`.
    pub unrestricted_min: f64,
    pub symmetric_min: f64,
    /// Minima under `int u = 0`, the class the Poincare argument covers.
    pub equality_unrestricted_min: f64,
    pub equality_symmetric_min: f64,
}

impl AsymmetryReport {
    pub fn gap(&self) -> f64 {
        self.symmetric_min - self.unrestricted_min
    }

    pub fn equality_gap(&self) -> f64 {
        self.equality_symmetric_min - self.equality_unrestricted_min
    }
}

/// The double-well model `int u'^2 + alpha (1 - u^2)^2`.
pub fn double_well(alpha: f64) -> Result<CoefficientModel> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    CoefficientModel::custom(
        1.0,
        |_| 1.0,
        |_| 0.0,
        move |u| alpha * (1.0 - u * u).powi(2),
        move |u| -4.0 * alpha * u * (1.0 - u * u),
    )
}

/// Compares minima of `int u'^2 + alpha (1 - u^2)^2` on `[0, 1]`, `u(0) = u(1) = 0`,
/// with and without the symmetry restriction `u(x) = u(1 - x)`.
pub fn asymmetry_demo(alpha: f64, n: usize, seeds: usize, rng_seed: u64, tol: f64) -> Result<AsymmetryReport> {
    let model = double_well(alpha)?;
    let sine = GridFunction::from_fn(1.0, n.max(2000), |x| (2.0 * std::f64::consts::PI * x).sin())?;
    let f_sine = energy(&sine, &model);
    let solve = |kind: ConstraintKind, symmetric: bool| -> Result<f64> {
        let mut prob = DiscreteProblem::new(model.clone(), 1.0, n, kind)?;
        prob.boundary = (0.0, 0.0);
        prob.symmetric = symmetric;
        Ok(multistart(&prob, seeds, rng_seed, tol)?.energy)
    };
    Ok(AsymmetryReport {
        alpha,
        f_sine,
        f_sine_exact: 2.0 * std::f64::consts::PI.powi(2) + 3.0 * alpha / 8.0,
        unrestricted_min: solve(ConstraintKind::Inequality, false)?,
        symmetric_min: solve(ConstraintKind::Inequality, true)?,
        equality_unrestricted_min: solve(ConstraintKind::Equality, false)?,
        equality_symmetric_min: solve(ConstraintKind::Equality, true)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_problem(t: f64, m: usize, kind: ConstraintKind) -> DiscreteProblem {
        DiscreteProblem::new(CoefficientModel::simple(), t, m, kind).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = DiscreteProblem::new(CoefficientModel::rod(1.0, 0.3).unwrap(), 3.0, 8, ConstraintKind::None).unwrap();
        let u: Vec<f64> = (0..=prob.n).map(|i| 1.0 - (i as f64 * 0.37).sin()).collect();
        let g = prob.energy_gradient(&u);
        for k in [1, 7, 12, 23] {
            let h = 1e-6;
            let mut up = u.clone();
            up[k] += h;
            let mut um = u.clone();
            um[k] -= h;
            let fd = (energy_of(&prob.model, prob.dx(), &up) - energy_of(&prob.model, prob.dx(), &um)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7 * fd.abs().max(1.0), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let prob = DiscreteProblem::new(CoefficientModel::rod(1.0, 0.3).unwrap(), 3.0, 8, ConstraintKind::None).unwrap();
        let u: Vec<f64> = (0..=prob.n).map(|i| 1.0 - (i as f64 * 0.37).sin()).collect();
        let (diag, off) = prob.energy_hessian(&u);
        let h = 1e-6;
        for k in [3, 10] {
            let mut up = u.clone();
            up[k] += h;
            let gp = prob.energy_gradient(&up);
            let g = prob.energy_gradient(&u);
            let col: Vec<f64> = gp.iter().zip(&g).map(|(a, b)| (a - b) / h).collect();
            assert!((col[k] - diag[k]).abs() < 1e-4 * diag[k].abs().max(1.0));
            assert!((col[k + 1] - off[k]).abs() < 1e-4 * off[k].abs().max(1.0));
            assert!((col[k - 1] - off[k - 1]).abs() < 1e-4 * off[k - 1].abs().max(1.0));
        }
    }

    #[test]
    fn window_adjoint_is_transpose() {
        let prob = simple_problem(3.0, 4, ConstraintKind::Inequality);
        let u: Vec<f64> = (0..=prob.n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mu: Vec<f64> = (0..prob.n_windows()).map(|j| 1.0 + j as f64).collect();
        // <mu, B u> = <B^T mu, u>
        let lhs: f64 = prob.windows(&u).iter().zip(&mu).map(|(b, m)| b * m).sum();
        let rhs: f64 = prob.window_adjoint(&mu).iter().zip(&u).map(|(a, v)| a * v).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn merit_hessian_matches_penalty_structure() {
        let mut prob = simple_problem(3.0, 4, ConstraintKind::Equality);
        prob.boundary = (0.3, -0.2);
        let (map, nv) = prob.unknown_map();
        let u: Vec<f64> = prob.expand(&map, &(0..nv).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>());
        let lambda = vec![0.1; prob.n_windows()];
        let rho = 3.0;
        let h = prob.merit_hessian(&u, &lambda, rho, &map, nv);
        // the merit is quadratic for the simple model with equality constraints
        let g0 = fold_gradient(&map, nv, &prob.merit_gradient(&u, &lambda, rho));
        for k in [0, 5, 9] {
            let mut v = prob.restrict(&map, &u, nv);
            v[k] += 1e-3;
            let g1 = fold_gradient(&map, nv, &prob.merit_gradient(&prob.expand(&map, &v), &lambda, rho));
            for i in 0..nv {
                let fd = (g1[i] - g0[i]) / 1e-3;
                assert!((fd - h.get(i, k)).abs() < 1e-8, "({i},{k}) {fd} vs {}", h.get(i, k));
            }
        }
    }

    #[test]
    fn unconstrained_matches_closed_form() {
        let prob = simple_problem(3.0, 256, ConstraintKind::None);
        let seed = GridFunction::constant(3.0, prob.n, 1.0).unwrap();
        let res = minimize_direct(&prob, &seed, 1e-8).unwrap();
        let err = res
            .u
            .xs()
            .zip(res.u.values())
            .map(|(x, v)| (v - (-1.0 + 2.0 * (x - 1.5).cosh() / 1.5f64.cosh())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        assert!(res.merit_monotone);
    }

    #[test]
    fn constrained_kkt_and_multiplier_recovery() {
        let prob = simple_problem(4.0, 32, ConstraintKind::Inequality);
        let res = multistart(&prob, 2, 7, 1e-7).unwrap();
        assert!(res.kkt.satisfied(1e-7), "{:?}", res.kkt);
        assert!(res.kkt.min_window >= -1e-7);
        let rec = recover_multiplier(&res.u, &prob.model).unwrap();
        let st = crate::bvp::solve_structured_auto(&prob.model, 4.0, &SolverOptions::default())
            .unwrap()
            .structure
            .unwrap();
        for x in [1.5, 2.0, 2.5] {
            assert!((rec.window_sum(x) - st.eval_g(x)).abs() < 1e-3, "{x}: {}", rec.window_sum(x));
        }
        for c in rec.clusters(&st) {
            assert!((c.mass - c.weight).abs() < 1e-3);
            assert!((c.centroid - c.position).abs() < prob.dx());
        }
    }

    #[test]
    fn unconstrained_stationary_point_has_no_force() {
        let t = 2.0;
        let u = GridFunction::from_fn(t, 256, |x| -1.0 + 2.0 * (x - 1.0).cosh() / 1f64.cosh()).unwrap();
        let rec = recover_multiplier(&u, &CoefficientModel::simple()).unwrap();
        assert!(rec.weights.iter().all(|&w| w < 1e-4), "{:?}", rec.weights.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn sine_energy_quadrature() {
        let model = double_well(35.0).unwrap();
        let sine = GridFunction::from_fn(1.0, 2000, |x| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2) + 3.0 * 35.0 / 8.0;
        assert!((energy(&sine, &model) - exact).abs() < 1e-3);
    }

    #[test]
    fn symmetric_restriction_is_symmetric() {
        let mut prob = DiscreteProblem::new(double_well(5.0).unwrap(), 1.0, 40, ConstraintKind::Inequality).unwrap();
        prob.boundary = (0.0, 0.0);
        prob.symmetric = true;
        let res = multistart(&prob, 2, 1, 1e-7).unwrap();
        assert!(res.u.sup_distance(&res.u.reflect()) < 1e-14);
    }

    #[test]
    fn rejects_misaligned_grid() {
        assert!(DiscreteProblem::new(CoefficientModel::simple(), 2.5, 3, ConstraintKind::None).is_err());
        assert!(DiscreteProblem::new(CoefficientModel::simple(), 0.5, 8, ConstraintKind::Inequality).is_err());
    }
}
