//! Natural-parameter continuation in the domain length `T`.
//!
//! The right-hand side is smoothed by replacing each jump with an arctan
//! ramp of steepness `A`, and both plateau values are shifted by a free
//! parameter `beta`. The window force `G` stays at its seed value, and the
//! corrector solves for `(s, x0, beta)`. `beta` is zero for the exact problem;
//! its size at accepted points is a health diagnostic.

use serde::Serialize;

use crate::bvp::{assemble_structured, newton, ShootingProblem, SolverOptions};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::gridfn::{fmt_f64, Solution};

/// Accepted continuation points live on this lattice in `T`, so that every
/// point admits an aligned solution grid.
pub const T_LATTICE: f64 = 1e-4;

fn snap(t: f64) -> f64 {
    (t / T_LATTICE).round() * T_LATTICE
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Arctan steepness `A`.
    pub steepness: f64,
    /// Target increment of `T` per [`ContinuationState::step`] call in a sweep.
    pub dt: f64,
    pub tol: f64,
    pub h: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_halvings: usize,
    pub beta_limit: f64,
    pub max_iter: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steepness: 1000.0,
            dt: 0.5,
            tol: 1e-9,
            h: 1e-3,
            initial_step: 0.25,
            min_step: 1e-4,
            max_step: 1.0,
            max_halvings: 10,
            beta_limit: 1e-2,
            max_iter: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    #[serde(rename = "T")]
    pub t_len: f64,
    pub x0: f64,
    #[serde(rename = "G")]
    pub g_total: f64,
    pub beta: f64,
    pub energy: f64,
}

impl HistoryRow {
    pub fn energy_minus_half_t(&self) -> f64 {
        self.energy - 0.5 * self.t_len
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub model: CoefficientModel,
    pub solution: Solution,
    pub t_len: f64,
    pub slope0: f64,
    pub x0: f64,
    pub g_total: f64,
    pub beta: f64,
    pub steepness: f64,
    /// Current step in `T`.
    pub step: f64,
    pub history: Vec<HistoryRow>,
    /// Previous accepted point `(T, [s, x0, beta])` for the secant predictor.
    prev: Option<(f64, [f64; 3])>,
    pub opts: ContinuationOptions,
}

/// Seeds a continuation from a converged structured solution; `beta` starts at 0.
pub fn init_from_solution(
    model: &CoefficientModel,
    sol: Solution,
    opts: ContinuationOptions,
) -> Result<ContinuationState> {
    let structure = sol.structure.clone().ok_or(Error::NotConverged(f64::INFINITY))?;
    if !(sol.residual_norm < 1e-6) || !(sol.info.shooting_residual < 1e-6) {
        return Err(Error::NotConverged(sol.residual_norm.max(sol.info.shooting_residual)));
    }
    let row = HistoryRow {
        t_len: structure.t_len(),
        x0: structure.x0(),
        g_total: structure.g_total(),
        beta: 0.0,
        energy: sol.energy,
    };
    Ok(ContinuationState {
        model: model.clone(),
        t_len: structure.t_len(),
        slope0: sol.info.slope0,
        x0: structure.x0(),
        g_total: structure.g_total(),
        beta: 0.0,
        steepness: opts.steepness,
        step: opts.initial_step.clamp(opts.min_step, opts.max_step),
        history: vec![row],
        prev: None,
        solution: sol,
        opts,
    })
}

impl ContinuationState {
    fn problem(&self, t_len: f64) -> ShootingProblem {
        ShootingProblem::new(self.model.clone(), t_len, self.opts.h).smoothed(self.steepness)
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.opts.tol, h: self.opts.h, ..SolverOptions::default() }
    }

    /// Corrector at fixed `T`: returns `([s, x0, beta], residual, iterations, energy)`.
    fn correct(&self, t_len: f64, guess: [f64; 3]) -> Result<([f64; 3], f64, usize, f64)> {
        let prob = self.problem(t_len);
        let g = self.g_total;
        let (z, norm, it) = newton(
            |z: &[f64; 3]| {
                let r = prob.residual_beta(z[0], z[1], g, z[2])?;
                Ok([r[0], r[1], r[2]])
            },
            guess,
            self.opts.tol,
            self.opts.max_iter,
            1e-6,
        )?;
        if !(z[2].abs() < self.opts.beta_limit) {
            return Err(Error::NoConvergence { iterations: it, residual: z[2].abs() });
        }
        let (layout, shot) = prob.shoot(z[0], z[1], g, z[2])?;
        let energy = shot.end[3] + layout.removed_periods as f64 * shot.period_energy();
        Ok((z, norm, it, energy))
    }

    fn predict(&self, t_new: f64) -> [f64; 3] {
        let cur = [self.slope0, self.x0, self.beta];
        match self.prev {
            Some((t_prev, z_prev)) if (self.t_len - t_prev).abs() > 0.0 => {
                let w = (t_new - self.t_len) / (self.t_len - t_prev);
                std::array::from_fn(|i| cur[i] + w * (cur[i] - z_prev[i]))
            }
            _ => cur,
        }
    }

    /// Advances the branch to `T + dt_target` through adaptive sub-steps.
    /// With `dt_target = 0` the current point is re-converged.
    pub fn step(&self, dt_target: f64) -> Result<ContinuationState> {
        let mut next = self.clone();
        let target = snap(self.t_len + dt_target);
        let dir = if target >= self.t_len { 1.0 } else { -1.0 };
        let mut last = None;
        if (target - self.t_len).abs() < 0.5 * T_LATTICE {
            let (z, norm, it, energy) = next.correct(self.t_len, [self.slope0, self.x0, self.beta])?;
            next.slope0 = z[0];
            next.x0 = z[1];
            next.beta = z[2];
            last = Some((norm, it, energy));
        }
        let mut halvings = 0;
        while dir * (target - next.t_len) > 0.5 * T_LATTICE {
            let len = next.step.min(dir * (target - next.t_len));
            let mut t_new = snap(next.t_len + dir * len);
            if (t_new - next.t_len).abs() < 0.5 * T_LATTICE {
                t_new = next.t_len + dir * T_LATTICE;
            }
            match next.correct(t_new, next.predict(t_new)) {
                Ok((z, norm, it, energy)) => {
                    next.prev = Some((next.t_len, [next.slope0, next.x0, next.beta]));
                    next.t_len = t_new;
                    next.slope0 = z[0];
                    next.x0 = z[1];
                    next.beta = z[2];
                    next.history.push(HistoryRow {
                        t_len: t_new,
                        x0: z[1],
                        g_total: next.g_total,
                        beta: z[2],
                        energy,
                    });
                    if it <= 3 {
                        next.step = (next.step * 1.5).min(next.opts.max_step);
                    }
                    halvings = 0;
                    last = Some((norm, it, energy));
                }
                Err(_) => {
                    halvings += 1;
                    next.step *= 0.5;
                    if halvings > next.opts.max_halvings || next.step < next.opts.min_step {
                        return Err(Error::StepFailure { t_len: next.t_len, halvings });
                    }
                }
            }
        }
        let (norm, it, _) = last.expect("at least one corrector solve");
        let prob = next.problem(next.t_len);
        next.solution = assemble_structured(
            &prob,
            (next.slope0, next.x0, next.g_total, next.beta),
            norm,
            it,
            &next.solver_options(),
        )?;
        Ok(next)
    }
}

/// Continues the simple-contact branch from `t_from` to `t_to`.
pub fn sweep(model: &CoefficientModel, t_from: f64, t_to: f64, opts: ContinuationOptions) -> Result<Vec<HistoryRow>> {
    let solver = SolverOptions { tol: opts.tol, h: opts.h, ..SolverOptions::default() };
    let seed = crate::bvp::solve_structured_auto(model, t_from, &solver)?;
    let mut state = init_from_solution(model, seed, opts)?;
    let dir = if t_to >= t_from { 1.0 } else { -1.0 };
    while dir * (t_to - state.t_len) > 0.5 * T_LATTICE {
        let dt = dir * opts.dt.min(dir * (t_to - state.t_len));
        state = state.step(dt)?;
    }
    Ok(state.history)
}

/// Sweep table as CSV: `T,x0,G,beta,energy,energy_minus_half_T`.
pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from("T,x0,G,beta,energy,energy_minus_half_T\n");
    for r in rows {
        let cols = [r.t_len, r.x0, r.g_total, r.beta, r.energy, r.energy_minus_half_t()];
        out.push_str(&cols.map(fmt_f64).join(","));
        out.push('\n');
    }
    out
}
