//! Unconstrained rod minimizer at a length where it passes through itself,
//! next to the constrained direct minimizer at the same length.
//!
//! `cargo run --release --example unconstrained_overlap`

use std::f64::consts::PI;

use coilcontact::bvp::{solve_unconstrained, SolverOptions};
use coilcontact::geometry::self_intersection;
use coilcontact::minimize::{multistart, ConstraintKind, DiscreteProblem};
use coilcontact::CoefficientModel;

fn main() -> coilcontact::Result<()> {
    let rod = CoefficientModel::rod(1.0, 1.0 / (2.0 * PI))?;
    let t = 1.5;
    let free = solve_unconstrained(&rod, t, &SolverOptions::default())?;
    let r = self_intersection(&free.u, 1e-7)?;
    println!("unconstrained T={t}: energy {:.6}, min Bu = {:.4} at x = {:.3}, overlaps: {}", free.energy, r.min_bu, r.argmin, r.violated);

    let prob = DiscreteProblem::new(rod, t, 64, ConstraintKind::Inequality)?;
    let con = multistart(&prob, 2, 0, 1e-7)?;
    let r = self_intersection(&con.u, 1e-7)?;
    println!("constrained   T={t}: energy {:.6}, min Bu = {:.3e}, overlaps: {}", con.energy, r.min_bu, r.violated);
    Ok(())
}
