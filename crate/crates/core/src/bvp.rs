//! Shooting solvers for stationary points.
//!
//! The Euler-Lagrange equation `-2a(u)u'' - a'(u)u'^2 + b'(u) = g` is
//! integrated as a first-order system with classical RK4. Steps never
//! cross a jump of `g`.
//!
//! With contact on `[x0, T - x0 - 1]` the periodic middle section is cut
//! down to a single period. What remains is a domain of length
//! `T~ = 2 x0 + p + 1` with five subdomains:
//!
//! ```text
//! [0, x0]          g = 0
//! [x0, x0+p]       g = g1
//! [x0+p, x0+1]     g = g2
//! [x0+1, x0+1+p]   g = g1
//! [x0+1+p, T~]     g = 0
//! ```
//!
//! The unknowns `(s, x0, G)` with `s = u'(0)` are found by Newton iteration on
//! `u(T~) = 1`, `u(x0 + 1) = u(x0)` and `int_{x0}^{x0+1} u = 0`.

use crate::coefficients::{CoefficientModel, WORKING_RANGE};
use crate::contact_structure::{classify_length, plateau_values, ContactStructure, INTEGER_GUARD};
use crate::error::{Error, Result};
use crate::gridfn::{
    aligned_cells_per_unit, constraint_profile, el_residual, hamiltonian_profile, GridFunction,
    Solution, SolveInfo,
};
use crate::linalg::solve_dense;
use crate::profile::PiecewiseConstant;

const BLOWUP: f64 = 1e8;

/// Integrator state: `u`, `u'`, `int u`, `int (a u'^2 + b)`.
pub type State = [f64; 4];

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> State {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// State at a recorded stop point.
    pub fn at(&self, x: f64) -> Option<State> {
        let k = self.xs.partition_point(|&v| v < x - 1e-12);
        (k < self.xs.len() && (self.xs[k] - x).abs() <= 1e-12).then(|| self.states[k])
    }
}

fn rhs(model: &CoefficientModel, g: f64, y: &State) -> State {
    let (u, up) = (y[0], y[1]);
    let a = model.a(u);
    let da = model.da(u);
    let db = model.db(u);
    [
        up,
        (db - da * up * up - g) / (2.0 * a),
        u,
        a * up * up + model.b(u),
    ]
}

fn check_state(model: &CoefficientModel, x: f64, y: &State) -> Result<()> {
    let (u, up) = (y[0], y[1]);
    if !(u.abs() <= BLOWUP && up.abs() <= BLOWUP) {
        return Err(Error::BlowUp { x, u, up });
    }
    // leaving the coefficient working range is reported as blow-up too
    if u.abs() > WORKING_RANGE {
        return Err(Error::BlowUp { x, u, up });
    }
    let a = model.a(u);
    if a < 0.5 * model.a0() {
        return Err(Error::CoercivityLoss {
            x,
            a,
            a0: model.a0(),
        });
    }
    Ok(())
}

/// Integrates from `interval.0` to `interval.1` with steps of at most `h`.
///
/// `breaks` are the jump points of `g`; `g` is sampled strictly inside the
/// current piece so that one-sided values are used at either end. The state
/// is recorded at the start, at every break, at every requested `nodes`
/// position and at the end.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with(
    model: &CoefficientModel,
    g: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    interval: (f64, f64),
    init: State,
    h: f64,
    nodes: &[f64],
) -> Result<Trajectory> {
    let (xa, xb) = interval;
    if !(h > 0.0) || !(xb >= xa) {
        return Err(Error::InvalidArgument(format!(
            "bad interval [{xa}, {xb}] or step {h}"
        )));
    }
    let eps = 1e-12 * (1.0 + xb.abs());
    let inner_breaks: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > xa + eps && b < xb - eps)
        .collect();
    let mut stops: Vec<f64> = inner_breaks.clone();
    stops.extend(
        nodes
            .iter()
            .copied()
            .filter(|&v| v > xa + eps && v < xb - eps),
    );
    stops.push(xb);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut xs = Vec::with_capacity(stops.len() + 1);
    let mut states = Vec::with_capacity(stops.len() + 1);
    xs.push(xa);
    states.push(init);
    check_state(model, xa, &init)?;

    let mut y = init;
    let mut x = xa;
    let mut piece = 0usize;
    for &stop in &stops {
        if stop - x <= eps {
            continue;
        }
        while piece < inner_breaks.len() && inner_breaks[piece] <= x + eps {
            piece += 1;
        }
        let lo = if piece == 0 {
            f64::NEG_INFINITY
        } else {
            inner_breaks[piece - 1]
        };
        let hi = inner_breaks.get(piece).copied().unwrap_or(f64::INFINITY);
        let hi_inside = if hi.is_finite() { hi.next_down() } else { hi };
        let gp = |t: f64| g(t.clamp(lo.max(f64::MIN), hi_inside));
        let steps = ((stop - x) / h).ceil().max(1.0) as usize;
        let dt = (stop - x) / steps as f64;
        for k in 0..steps {
            let xk = x + k as f64 * dt;
            let x_mid = xk + 0.5 * dt;
            let x_end = if k + 1 == steps { stop } else { xk + dt };
            let k1 = rhs(model, gp(xk), &y);
            let y2: State = std::array::from_fn(|i| y[i] + 0.5 * dt * k1[i]);
            let k2 = rhs(model, gp(x_mid), &y2);
            let y3: State = std::array::from_fn(|i| y[i] + 0.5 * dt * k2[i]);
            let k3 = rhs(model, gp(x_mid), &y3);
            let y4: State = std::array::from_fn(|i| y[i] + dt * k3[i]);
            let k4 = rhs(model, gp(x_end), &y4);
            y = std::array::from_fn(|i| {
                y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            });
            check_state(model, x_end, &y)?;
        }
        x = stop;
        xs.push(stop);
        states.push(y);
    }
    Ok(Trajectory { xs, states })
}

/// RK4 solution of the initial-value problem `u(a) = u_init`, `u'(a) = uprime_init`
/// for a piecewise-constant right-hand side.
pub fn integrate_el(
    model: &CoefficientModel,
    g: &PiecewiseConstant,
    interval: (f64, f64),
    u_init: f64,
    uprime_init: f64,
    h: f64,
    nodes: &[f64],
) -> Result<Trajectory> {
    integrate_with(
        model,
        &|x| g.eval(x),
        g.breaks(),
        interval,
        [u_init, uprime_init, 0.0, 0.0],
        h,
        nodes,
    )
}

/// Piecewise-constant right-hand side on the reduced domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLayout {
    pub x0: f64,
    pub p: f64,
    pub big_p: usize,
    pub integer: bool,
    pub g1: f64,
    pub g2: f64,
    pub g_total: f64,
    pub beta: f64,
    pub t_reduced: f64,
    /// Number of whole periods removed: `T - T~`.
    pub removed_periods: usize,
    pub profile: PiecewiseConstant,
}

/// Results of one shot over the reduced domain.
#[derive(Debug, Clone, Copy)]
pub struct Shot {
    pub end: State,
    pub at_x0: State,
    pub at_x0_plus_1: State,
}

impl Shot {
    pub fn window_integral(&self) -> f64 {
        self.at_x0_plus_1[2] - self.at_x0[2]
    }

    pub fn period_energy(&self) -> f64 {
        self.at_x0_plus_1[3] - self.at_x0[3]
    }
}

/// Solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub h: f64,
    pub max_iter: usize,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
    /// Smallest cells-per-unit for the output grid.
    pub min_cells_per_unit: usize,
    pub max_cells_per_unit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            h: 1e-3,
            max_iter: 50,
            fd_step: 1e-6,
            min_cells_per_unit: 1000,
            max_cells_per_unit: 100_000,
        }
    }
}

/// The structured stationary-point system for one domain length.
#[derive(Debug, Clone)]
pub struct ShootingProblem {
    pub model: CoefficientModel,
    pub t_len: f64,
    pub h: f64,
    /// Arctan steepness; `None` integrates the discontinuous `g`.
    pub smoothing: Option<f64>,
}

impl ShootingProblem {
    pub fn new(model: CoefficientModel, t_len: f64, h: f64) -> Self {
        ShootingProblem {
            model,
            t_len,
            h,
            smoothing: None,
        }
    }

    pub fn smoothed(mut self, steepness: f64) -> Self {
        self.smoothing = Some(steepness);
        self
    }

    /// Reduced layout for contact starting at `x0` with window force `g_total`,
    /// plateaus shifted by `beta`.
    pub fn layout(&self, x0: f64, g_total: f64, beta: f64) -> Result<ReducedLayout> {
        let len = self.t_len - 2.0 * x0 - 1.0;
        if !(x0 >= 0.0) || !(len >= -INTEGER_GUARD) {
            return Err(Error::InvalidInterval {
                x0,
                x1: self.t_len - x0 - 1.0,
                t_len: self.t_len,
            });
        }
        let (p, big_p, integer) = classify_length(len.max(0.0));
        if integer {
            return Ok(ReducedLayout {
                x0,
                p: 0.0,
                big_p,
                integer,
                g1: g_total,
                g2: g_total,
                g_total,
                beta,
                t_reduced: 2.0 * x0 + 1.0,
                removed_periods: big_p,
                profile: PiecewiseConstant::new(vec![x0, x0 + 1.0], vec![0.0, g_total + beta, 0.0]),
            });
        }
        let (g1, g2) = plateau_values(g_total, p, big_p);
        Ok(ReducedLayout {
            x0,
            p,
            big_p,
            integer,
            g1,
            g2,
            g_total,
            beta,
            t_reduced: 2.0 * x0 + p + 1.0,
            removed_periods: big_p - 1,
            profile: PiecewiseConstant::new(
                vec![x0, x0 + p, x0 + 1.0, x0 + 1.0 + p],
                vec![0.0, g1 + beta, g2 + beta, g1 + beta, 0.0],
            ),
        })
    }

    fn trajectory(&self, layout: &ReducedLayout, s: f64, nodes: &[f64]) -> Result<Trajectory> {
        let init = [1.0, s, 0.0, 0.0];
        let interval = (0.0, layout.t_reduced);
        let mut all_nodes = vec![layout.x0, layout.x0 + 1.0];
        all_nodes.extend_from_slice(nodes);
        match self.smoothing {
            None => integrate_with(
                &self.model,
                &|x| layout.profile.eval(x),
                layout.profile.breaks(),
                interval,
                init,
                self.h,
                &all_nodes,
            ),
            Some(a) => {
                // smooth the full-domain profile and map it onto the reduced domain
                let full = ContactStructure::build(
                    layout.x0,
                    (self.t_len - layout.x0 - 1.0).max(layout.x0),
                    layout.g_total,
                    self.t_len,
                )?
                .profile_shifted(layout.beta);
                let cut = layout.x0 + 1.0;
                let shift = layout.removed_periods as f64;
                integrate_with(
                    &self.model,
                    &|x| full.smoothed(if x <= cut { x } else { x + shift }, a),
                    layout.profile.breaks(),
                    interval,
                    init,
                    self.h,
                    &all_nodes,
                )
            }
        }
    }

    pub fn shoot(&self, s: f64, x0: f64, g_total: f64, beta: f64) -> Result<(ReducedLayout, Shot)> {
        let layout = self.layout(x0, g_total, beta)?;
        let traj = self.trajectory(&layout, s, &[])?;
        let at_x0 = traj.at(layout.x0).unwrap_or(traj.states[0]);
        let at_x0_plus_1 = traj
            .at(layout.x0 + 1.0)
            .ok_or_else(|| Error::InvalidArgument("x0 + 1 outside the reduced domain".into()))?;
        let shot = Shot {
            end: traj.last(),
            at_x0,
            at_x0_plus_1,
        };
        Ok((layout, shot))
    }

    /// `(x, u, u')` at every jump of the reduced right-hand side.
    pub fn jump_states(&self, s: f64, x0: f64, g_total: f64, beta: f64) -> Result<Vec<(f64, f64, f64)>> {
        let layout = self.layout(x0, g_total, beta)?;
        let breaks = layout.profile.breaks().to_vec();
        let traj = self.trajectory(&layout, s, &breaks)?;
        Ok(breaks
            .iter()
            .filter_map(|&x| traj.at(x).map(|st| (x, st[0], st[1])))
            .collect())
    }

    /// `(u(T~) - 1, (u(x0 + 1) - u(x0)) / p, int_{x0}^{x0+1} u)`.
    ///
    /// The reduced problem is symmetric about `T~/2`, so `u(x0 + 1) = u(x0 + p)`
    /// and the unscaled period mismatch vanishes like `p u'(x0)` as `p -> 0`.
    /// Dividing by `p` removes that spurious root. In the integer case the
    /// limit `(u'(x0) - u'(x0 + 1)) / 2` is used. A single contact point has
    /// no period condition.
    pub fn residual(&self, s: f64, x0: f64, g_total: f64) -> Result<[f64; 3]> {
        let r = self.residual_beta(s, x0, g_total, 0.0)?;
        Ok([r[0], r[1], r[2]])
    }

    /// [`residual`](Self::residual) with plateaus shifted by `beta`, plus the
    /// derivative match `u'(x0 + 1) - u'(x0)` as fourth component.
    pub fn residual_beta(&self, s: f64, x0: f64, g_total: f64, beta: f64) -> Result<[f64; 4]> {
        let (layout, shot) = self.shoot(s, x0, g_total, beta)?;
        let (lo, hi) = (shot.at_x0, shot.at_x0_plus_1);
        let period = if !layout.integer {
            (hi[0] - lo[0]) / layout.p
        } else if layout.big_p > 0 {
            0.5 * (lo[1] - hi[1])
        } else {
            hi[0] - lo[0]
        };
        Ok([
            shot.end[0] - 1.0,
            period,
            shot.window_integral(),
            hi[1] - lo[1],
        ])
    }

    /// Integrates the converged reduced problem on an aligned grid and
    /// rebuilds the full solution by repeating the middle period.
    pub fn expand(
        &self,
        s: f64,
        x0: f64,
        g_total: f64,
        beta: f64,
        opts: &SolverOptions,
    ) -> Result<(GridFunction, ReducedLayout, Shot)> {
        let layout = self.layout(x0, g_total, beta)?;
        let m =
            aligned_cells_per_unit(self.t_len, opts.min_cells_per_unit, opts.max_cells_per_unit)
                .ok_or(Error::MisalignedGrid {
                    t_len: self.t_len,
                    n: 0,
                })?;
        let dx = 1.0 / m as f64;
        let n = (self.t_len * m as f64).round() as usize;
        let k = layout.removed_periods;
        let n_red = n - k * m;
        let nodes: Vec<f64> = (1..n_red).map(|i| i as f64 * dx).collect();
        let traj = self.trajectory(&layout, s, &nodes)?;
        let reduced: Vec<f64> = std::iter::once(1.0)
            .chain(
                nodes
                    .iter()
                    .map(|&x| traj.at(x).map(|st| st[0]).unwrap_or(f64::NAN)),
            )
            .chain(std::iter::once(traj.last()[0]))
            .collect();
        let at_x0 = traj.at(layout.x0).unwrap_or(traj.states[0]);
        let at_x0_plus_1 = traj.at(layout.x0 + 1.0).expect("x0 + 1 is a stop point");
        let shot = Shot {
            end: traj.last(),
            at_x0,
            at_x0_plus_1,
        };

        let left_end = x0 + 1.0;
        let right_start = x0 + 1.0 + k as f64;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let x = i as f64 * dx;
                let idx = if x <= left_end + 1e-12 {
                    i
                } else if x >= right_start - 1e-12 {
                    i - k * m
                } else {
                    let shift = (x - left_end - 1e-12).ceil() as usize;
                    i - shift * m
                };
                reduced[idx]
            })
            .collect();
        Ok((GridFunction::new(self.t_len, values)?, layout, shot))
    }
}

/// Unscaled shooting residuals `(u(T~) - 1, u(x0 + 1) - u(x0), int_{x0}^{x0+1} u)`.
pub fn shoot_residual(prob: &ShootingProblem, s: f64, x0: f64, g_total: f64) -> Result<[f64; 3]> {
    let (_, shot) = prob.shoot(s, x0, g_total, 0.0)?;
    Ok([
        shot.end[0] - 1.0,
        shot.at_x0_plus_1[0] - shot.at_x0[0],
        shot.window_integral(),
    ])
}

/// Initial guess for [`solve_structured`].
///
/// `s` comes from the unconstrained solution at the same length (or `-1` if
/// none exists), `x0 = min(1, 0.45 (T - 1))`, and `G` is the window integral of
/// the unconstrained solution's Euler-Lagrange operator, clamped to `>= 0.1`.
pub fn initial_guess(
    model: &CoefficientModel,
    t_len: f64,
    opts: &SolverOptions,
) -> (f64, f64, f64) {
    let x0 = 1.0f64.min(0.45 * (t_len - 1.0));
    match solve_unconstrained(model, t_len, opts) {
        Ok(sol) => {
            let res = el_residual(&sol.u, model, |_| 0.0, &[]);
            let m = sol.u.cells_per_unit();
            let g = match m {
                Some(m) => {
                    let i0 = (x0 * m as f64).round() as usize;
                    let v = res.values.values();
                    v[i0..(i0 + m).min(v.len() - 1)].iter().sum::<f64>() / m as f64
                }
                None => 0.0,
            };
            (sol.info.slope0, x0, g.max(0.1))
        }
        Err(_) => (-1.0, x0, 0.1),
    }
}

fn inf_norm<const N: usize>(r: &[f64; N]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Damped Newton iteration with a forward-difference Jacobian.
///
/// Returns the root, the final residual norm and the iteration count.
pub fn newton<const N: usize>(
    f: impl Fn(&[f64; N]) -> Result<[f64; N]>,
    init: [f64; N],
    tol: f64,
    max_iter: usize,
    fd_step: f64,
) -> Result<([f64; N], f64, usize)> {
    let mut z = init;
    let mut r = f(&z)?;
    let mut norm = inf_norm(&r);
    for it in 0..max_iter {
        if norm < tol {
            return Ok((z, norm, it));
        }
        let mut jac = vec![0.0; N * N];
        for j in 0..N {
            let step = fd_step * z[j].abs().max(1.0);
            let mut zp = z;
            zp[j] += step;
            // step backwards if the forward point leaves the domain
            let (rp, step) = match f(&zp) {
                Ok(rp) => (rp, step),
                Err(_) => {
                    zp[j] = z[j] - step;
                    (f(&zp)?, -step)
                }
            };
            for i in 0..N {
                jac[i * N + j] = (rp[i] - r[i]) / step;
            }
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let dz = solve_dense(&jac, &rhs, N).ok_or(Error::NoConvergence {
            iterations: it,
            residual: norm,
        })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=8 {
            let trial: [f64; N] = std::array::from_fn(|i| z[i] + lambda * dz[i]);
            if let Ok(rt) = f(&trial) {
                let nt = inf_norm(&rt);
                if nt < norm || nt < tol {
                    z = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: it + 1,
                residual: norm,
            });
        }
    }
    if norm < tol {
        Ok((z, norm, max_iter))
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: norm,
        })
    }
}

/// Builds the full solution from converged reduced unknowns.
pub fn assemble_structured(
    prob: &ShootingProblem,
    unknowns: (f64, f64, f64, f64),
    newton_residual: f64,
    iterations: usize,
    opts: &SolverOptions,
) -> Result<Solution> {
    let (s, x0, g_total, beta) = unknowns;
    let t_len = prob.t_len;
    let (u, layout, shot) = prob.expand(s, x0, g_total, beta, opts)?;
    let x1 = (t_len - x0 - 1.0).max(x0);
    let structure = ContactStructure::build(x0, x1, g_total, t_len)?;
    let rhs = structure.profile_shifted(beta);
    let energy = shot.end[3] + layout.removed_periods as f64 * shot.period_energy();
    let hamiltonian_segments = hamiltonian_profile(&u, &prob.model, &rhs);
    let residual_norm = el_residual(&u, &prob.model, |x| rhs.eval(x), rhs.breaks()).sup_norm();
    Ok(Solution {
        u,
        structure: Some(structure),
        rhs,
        energy,
        hamiltonian_segments,
        residual_norm,
        info: SolveInfo {
            slope0: s,
            shooting_residual: newton_residual,
            iterations,
            beta,
            reduced_length: layout.t_reduced,
        },
    })
}

/// Checks `Bu >= -slack` on the solution grid.
pub fn check_admissible(u: &GridFunction, slack: f64) -> Result<()> {
    let bu = constraint_profile(u)?;
    let (j, min) = bu
        .values()
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc },
        );
    if min < -slack {
        return Err(Error::AdmissibilityViolation {
            min_bu: min,
            at: bu.x(j),
        });
    }
    Ok(())
}

/// Solves the structured system for contact on `[x0, T - x0 - 1]`.
///
/// Newton's method is tried first from `init = (s, x0, G)`. If it fails or
/// produces an inadmissible profile, the solver falls back to a scan over
/// `x0`. For each fixed `x0` the nearly linear pair `(s, G)` is solved, and
/// sign changes of the period mismatch are located within each range of
/// constant `P`. A single contact point at `x0 = (T - 1)/2` is also
/// considered. Among the admissible candidates with `G >= 0`, the one of
/// least energy is returned.
pub fn solve_structured(
    model: &CoefficientModel,
    t_len: f64,
    init: (f64, f64, f64),
    opts: &SolverOptions,
) -> Result<Solution> {
    if !(t_len > 1.0) {
        return Err(Error::DomainTooShort(t_len));
    }
    let prob = ShootingProblem::new(model.clone(), t_len, opts.h);
    let direct = newton(
        |z: &[f64; 3]| prob.residual(z[0], z[1], z[2]),
        [init.0, init.1, init.2],
        opts.tol,
        opts.max_iter,
        opts.fd_step,
    )
    .and_then(|(z, norm, it)| finish_candidate(&prob, (z[0], z[1], z[2]), norm, it, opts));
    match direct {
        Ok(sol) => Ok(sol),
        Err(err) => scan_structured(&prob, init, opts).map_err(|scan_err| match scan_err {
            Error::NoConvergence { .. } => err,
            other => other,
        }),
    }
}

fn finish_candidate(
    prob: &ShootingProblem,
    z: (f64, f64, f64),
    norm: f64,
    iterations: usize,
    opts: &SolverOptions,
) -> Result<Solution> {
    if z.2 < 0.0 {
        return Err(Error::NegativeG(z.2));
    }
    let sol = assemble_structured(prob, (z.0, z.1, z.2, 0.0), norm, iterations, opts)?;
    check_admissible(&sol.u, 10.0 * opts.tol)?;
    Ok(sol)
}

/// `(s, G)` solving `u(T~) = 1` and `int_{x0}^{x0+1} u = 0` for fixed `x0`.
fn inner_solve(
    prob: &ShootingProblem,
    x0: f64,
    guess: (f64, f64),
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    let (z, _, _) = newton(
        |z: &[f64; 2]| {
            let r = prob.residual(z[0], x0, z[1])?;
            Ok([r[0], r[2]])
        },
        [guess.0, guess.1],
        0.1 * opts.tol,
        opts.max_iter,
        opts.fd_step,
    )?;
    Ok((z[0], z[1]))
}

fn scan_structured(
    prob: &ShootingProblem,
    init: (f64, f64, f64),
    opts: &SolverOptions,
) -> Result<Solution> {
    let t_len = prob.t_len;
    let x_max = 0.5 * (t_len - 1.0);
    let mut roots: Vec<(f64, f64, f64)> = Vec::new();
    // single contact point
    if let Ok((s, g)) = inner_solve(prob, x_max, (init.0, init.2), opts) {
        roots.push((s, x_max, g));
    }
    // branches of constant P: contact length in (n, n + 1)
    let samples = 12;
    let mut guess = (init.0, init.2);
    for n in 0..(t_len - 1.0).ceil() as usize {
        let x_hi = 0.5 * (t_len - 1.0 - n as f64);
        let x_lo = (0.5 * (t_len - 2.0 - n as f64)).max(0.0);
        if x_hi - x_lo < 1e-6 {
            continue;
        }
        let margin = 1e-7 * (x_hi - x_lo).max(1.0);
        let mut prev: Option<(f64, f64, (f64, f64))> = None;
        for k in 0..=samples {
            let x0 = x_lo + margin + (x_hi - x_lo - 2.0 * margin) * k as f64 / samples as f64;
            let Ok(sg) = inner_solve(prob, x0, guess, opts) else {
                prev = None;
                continue;
            };
            guess = sg;
            let Ok(r) = prob.residual(sg.0, x0, sg.1) else {
                prev = None;
                continue;
            };
            if let Some((xp, rp, sgp)) = prev {
                if rp * r[1] <= 0.0 {
                    if let Ok(root) = refine_period_root(prob, (xp, rp, sgp), (x0, r[1], sg), opts)
                    {
                        roots.push(root);
                    }
                }
            }
            prev = Some((x0, r[1], sg));
        }
    }
    let mut best: Option<Solution> = None;
    let mut last_err = Error::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    };
    for z in roots {
        let norm = prob
            .residual(z.0, z.1, z.2)
            .map(|r| inf_norm(&r))
            .unwrap_or(f64::INFINITY);
        match finish_candidate(prob, z, norm, 0, opts) {
            Ok(sol) if best.as_ref().is_none_or(|b| sol.energy < b.energy) => best = Some(sol),
            Ok(_) => {}
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// Bracketed secant/bisection on the period mismatch in `x0`.
fn refine_period_root(
    prob: &ShootingProblem,
    a: (f64, f64, (f64, f64)),
    b: (f64, f64, (f64, f64)),
    opts: &SolverOptions,
) -> Result<(f64, f64, f64)> {
    let (mut a, mut b) = (a, b);
    for it in 0..200 {
        let secant = b.0 - b.1 * (b.0 - a.0) / (b.1 - a.1);
        let mid = 0.5 * (a.0 + b.0);
        let x =
            if it % 3 == 2 || !secant.is_finite() || (secant - mid).abs() > 0.5 * (b.0 - a.0).abs()
            {
                mid
            } else {
                secant
            };
        let sg = inner_solve(prob, x, b.2, opts)?;
        let r = prob.residual(sg.0, x, sg.1)?;
        if r[1].abs() < opts.tol || (b.0 - a.0).abs() < 1e-14 {
            return Ok((sg.0, x, sg.1));
        }
        if r[1] * a.1 <= 0.0 {
            b = (x, r[1], sg);
        } else {
            a = (x, r[1], sg);
        }
    }
    Err(Error::NoConvergence {
        iterations: 200,
        residual: a.1.abs().min(b.1.abs()),
    })
}

/// Like [`solve_structured`] with the initial guess from [`initial_guess`].
pub fn solve_structured_auto(
    model: &CoefficientModel,
    t_len: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let init = initial_guess(model, t_len, opts);
    solve_structured(model, t_len, init, opts)
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Half-length of the symmetric single-well orbit from `u = 1` down to the
/// turning point `u_min`: `int_{u_min}^1 sqrt(a / (b - b(u_min))) du`,
/// evaluated with `u = u_min + t^2` to remove the square-root singularity.
pub fn half_length(model: &CoefficientModel, u_min: f64) -> Option<f64> {
    let level = model.b(u_min);
    let top = (1.0 - u_min).sqrt();
    let panels = 400;
    let w = top / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let c = (k as f64 + 0.5) * w;
        for &(xi, wi) in &GAUSS8 {
            let t = c + 0.5 * w * xi;
            let u = u_min + t * t;
            let gap = model.b(u) - level;
            if !(gap > 0.0) {
                return None;
            }
            acc += 0.5 * w * wi * 2.0 * t * (model.a(u) / gap).sqrt();
        }
    }
    Some(acc)
}

/// Whether `u_min` can be the turning point of a single-well orbit through `u = 1`.
fn admissible_turning_point(model: &CoefficientModel, u_min: f64) -> bool {
    if !(u_min < 1.0) || model.db(u_min) <= 0.0 {
        return false;
    }
    let level = model.b(u_min);
    (1..=400).all(|k| {
        let u = u_min + (1.0 - u_min) * k as f64 / 400.0;
        model.b(u) > level
    })
}

/// Turning point `u_min` whose half-length is `T/2`.
pub fn turning_point(model: &CoefficientModel, t_len: f64) -> Result<f64> {
    let target = 0.5 * t_len;
    let candidates: Vec<f64> = (0..=240)
        .map(|k| 1.0 - 10f64.powf(-4.0 + k as f64 * 0.04))
        .filter(|&u| u.abs() <= 1e5)
        .collect();
    let length_at = |u: f64| {
        if admissible_turning_point(model, u) {
            half_length(model, u)
        } else {
            None
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    for &u in &candidates {
        let mut val = length_at(u);
        let mut u = u;
        if let (Some((u_ok, l_ok)), None) = (prev, val) {
            // the orbit may stretch without bound towards the admissibility edge
            let (mut good, mut bad) = (u_ok, u);
            for _ in 0..60 {
                let mid = 0.5 * (good + bad);
                match length_at(mid) {
                    Some(l) => {
                        good = mid;
                        if (l_ok - target) * (l - target) <= 0.0 {
                            u = mid;
                            val = Some(l);
                            break;
                        }
                    }
                    None => bad = mid,
                }
            }
        }
        match (prev, val) {
            (Some((u_prev, l_prev)), Some(l)) if (l_prev - target) * (l - target) <= 0.0 => {
                let (mut lo, mut hi) = (u, u_prev);
                let mut f_lo = l - target;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let f_mid = length_at(mid).ok_or(Error::NoTurningPoint(t_len))? - target;
                    if f_mid * f_lo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        f_lo = f_mid;
                    }
                    if (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
                        break;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            _ => {}
        }
        prev = val.map(|l| (u, l));
    }
    Err(Error::NoTurningPoint(t_len))
}

/// Symmetric single-well stationary point without contact force.
///
/// The turning point comes from the first integral `-a(u)u'^2 + b(u) = H`. The
/// profile is then refined by shooting on `u'(0)` so that `u'(T/2) = 0` holds
/// for the discrete flow. The right half is the mirror image of the left.
pub fn solve_unconstrained(
    model: &CoefficientModel,
    t_len: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    if !(t_len > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "domain length must be positive, got {t_len}"
        )));
    }
    let u_min = turning_point(model, t_len)?;
    let level = model.b(u_min);
    let s0 = -((model.b(1.0) - level) / model.a(1.0)).max(0.0).sqrt();
    let half = 0.5 * t_len;
    let zero = PiecewiseConstant::constant(0.0);
    let shoot = |z: &[f64; 1]| -> Result<[f64; 1]> {
        let traj = integrate_el(model, &zero, (0.0, half), 1.0, z[0], opts.h, &[])?;
        Ok([traj.last()[1]])
    };
    let scale = s0.abs().max(1.0);
    let (z, norm, iters) = newton(shoot, [s0], opts.tol * scale, opts.max_iter, opts.fd_step)?;
    let s = z[0];

    let n = match aligned_cells_per_unit(t_len, opts.min_cells_per_unit, opts.max_cells_per_unit) {
        Some(m) => (t_len * m as f64).round() as usize,
        None => ((t_len / opts.h).ceil() as usize).max(16),
    };
    let dx = t_len / n as f64;
    let n_left = n / 2;
    let nodes: Vec<f64> = (1..=n_left)
        .map(|i| i as f64 * dx)
        .filter(|&x| x < half)
        .collect();
    let traj = integrate_el(model, &zero, (0.0, half), 1.0, s, opts.h, &nodes)?;
    let mut values = vec![0.0; n + 1];
    values[0] = 1.0;
    for (i, &x) in nodes.iter().enumerate() {
        values[i + 1] = traj.at(x).expect("node is a stop point")[0];
    }
    if n % 2 == 0 {
        values[n_left] = traj.last()[0];
    }
    for i in 0..=n / 2 {
        values[n - i] = values[i];
    }
    let u = GridFunction::new(t_len, values)?;
    let rhs = PiecewiseConstant::constant(0.0);
    let energy = 2.0 * traj.last()[3];
    let hamiltonian_segments = hamiltonian_profile(&u, model, &rhs);
    let residual_norm = el_residual(&u, model, |_| 0.0, &[]).sup_norm();
    Ok(Solution {
        u,
        structure: None,
        rhs,
        energy,
        hamiltonian_segments,
        residual_norm,
        info: SolveInfo {
            slope0: s,
            shooting_residual: norm,
            iterations: iters,
            beta: 0.0,
            reduced_length: t_len,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn simple() -> CoefficientModel {
        CoefficientModel::simple()
    }

    #[test]
    fn equilibria_stay_put() {
        let zero = PiecewiseConstant::constant(0.0);
        let t = integrate_el(&simple(), &zero, (0.0, 3.0), -1.0, 0.0, 1e-2, &[]).unwrap();
        assert!((t.last()[0] + 1.0).abs() < 1e-14 && t.last()[1].abs() < 1e-14);
        let one = PiecewiseConstant::constant(1.0);
        let t = integrate_el(&simple(), &one, (0.0, 3.0), 0.0, 0.0, 1e-2, &[]).unwrap();
        assert!(t.last()[0].abs() < 1e-14);
    }

    #[test]
    fn linear_ode_closed_form() {
        // -u'' + u + 1 = 0, u(0) = 1, u'(0) = -1  =>  u = -1 + 2 cosh x - sinh x
        let zero = PiecewiseConstant::constant(0.0);
        let nodes: Vec<f64> = (1..100).map(|k| k as f64 * 0.03).collect();
        let t = integrate_el(&simple(), &zero, (0.0, 3.0), 1.0, -1.0, 1e-3, &nodes).unwrap();
        let err =
            t.xs.iter()
                .zip(&t.states)
                .map(|(&x, s)| (s[0] - (-1.0 + 2.0 * x.cosh() - x.sinh())).abs())
                .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn steps_stop_at_jumps() {
        // g = 1 on [1, 2): with u(0)=-1, u'(0)=0 the solution stays at -1 until x=1
        let g = PiecewiseConstant::new(vec![1.0, 2.0], vec![0.0, 1.0, 0.0]);
        let t = integrate_el(&simple(), &g, (0.0, 3.0), -1.0, 0.0, 0.05, &[]).unwrap();
        assert!(t.at(1.0).is_some() && t.at(2.0).is_some());
        assert_abs_diff_eq!(t.at(1.0).unwrap()[0], -1.0, epsilon = 1e-15);
        // on [1,2]: u = -cosh(x - 1) solves -u'' + u + 1 = 1 with u(1) = -1, u'(1) = 0
        let exact = -(1f64.cosh());
        assert_abs_diff_eq!(t.at(2.0).unwrap()[0], exact, epsilon = 1e-5);
    }

    #[test]
    fn fourth_order_convergence() {
        let zero = PiecewiseConstant::constant(0.0);
        let exact = -1.0 + 2.0 * 2f64.cosh() - 2f64.sinh();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let t = integrate_el(&simple(), &zero, (0.0, 2.0), 1.0, -1.0, h, &[]).unwrap();
                (t.last()[0] - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 4.0).abs() < 0.2, "rate {rate}");
        }
    }

    #[test]
    fn blowup_detected() {
        let zero = PiecewiseConstant::constant(0.0);
        let err = integrate_el(&simple(), &zero, (0.0, 40.0), 1.0, 1.0, 1e-2, &[]).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn coercivity_loss_detected() {
        let rod = CoefficientModel::rod(1.0, 0.1).unwrap();
        let zero = PiecewiseConstant::constant(0.0);
        let err = integrate_el(&rod, &zero, (0.0, 1.0), 300.0, 0.0, 1e-3, &[]).unwrap_err();
        assert!(matches!(err, Error::CoercivityLoss { .. }));
    }

    #[test]
    fn unconstrained_simple_matches_closed_form() {
        let opts = SolverOptions::default();
        for t_len in [1.5, 3.0, 6.0] {
            let sol = solve_unconstrained(&simple(), t_len, &opts).unwrap();
            let exact = |x: f64| -1.0 + 2.0 * (x - 0.5 * t_len).cosh() / (0.5 * t_len).cosh();
            let err = sol
                .u
                .xs()
                .zip(sol.u.values())
                .map(|(x, v)| (v - exact(x)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "T = {t_len}: {err}");
            // first integral along the trajectory
            let seg = &sol.hamiltonian_segments[0];
            assert!(seg.max_dev < 1e-6, "{}", seg.max_dev);
        }
    }

    #[test]
    fn layout_cases() {
        let prob = ShootingProblem::new(simple(), 5.0, 1e-3);
        let l = prob.layout(1.5, 1.0, 0.0).unwrap();
        assert!(l.integer);
        assert_eq!(l.big_p, 1);
        assert_abs_diff_eq!(l.t_reduced, 4.0);
        assert_eq!(l.removed_periods, 1);
        let l = prob.layout(1.2, 1.0, 0.0).unwrap();
        assert!(!l.integer);
        assert_abs_diff_eq!(l.p, 0.6, epsilon = 1e-12);
        assert_eq!(l.big_p, 2);
        assert_abs_diff_eq!(l.t_reduced, 4.0, epsilon = 1e-12);
        assert_eq!(l.removed_periods, 1);
        assert!(prob.layout(2.5, 1.0, 0.0).is_err());
    }
}
