//! Direct constrained minimization against the structured solution, with the
//! contact force recovered from the discrete minimizer.
//!
//! `cargo run --release --example direct_minimizer -- [T]`

use coilcontact::bvp::{solve_structured_auto, SolverOptions};
use coilcontact::gridfn::contact_set;
use coilcontact::minimize::{discrete_contact_tol, multistart, recover_multiplier, ConstraintKind, DiscreteProblem};
use coilcontact::CoefficientModel;

fn main() -> coilcontact::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let model = CoefficientModel::simple();
    let structured = solve_structured_auto(&model, t, &SolverOptions::default())?;
    let st = structured.structure.as_ref().expect("contact structure");

    let prob = DiscreteProblem::new(model.clone(), t, 64, ConstraintKind::Inequality)?;
    let direct = multistart(&prob, 2, 0, 1e-7)?;
    println!("energy: direct {:.6}  structured {:.6}", direct.energy, structured.energy);
    println!("KKT: {:?}", direct.kkt);

    let tol = discrete_contact_tol(prob.dx());
    for (name, u) in [("direct", &direct.u), ("structured", &structured.u)] {
        let set = contact_set(u, tol)?;
        let shown: Vec<String> = set.iter().map(|i| format!("[{:.4}, {:.4}]", i.start, i.end)).collect();
        println!("contact set ({name}): {}", shown.join(" "));
    }

    let rec = recover_multiplier(&direct.u, &model)?;
    println!("recovered mass {:.6} (predicted {:.6}), {:.1}% within one cell of a delta", rec.total_mass(), st.total_mass(), 100.0 * rec.mass_near(st));
    for c in rec.clusters(st) {
        println!("  delta at {:.5} weight {:.5}: nearest mass {:.5}, centroid {:.5}", c.position, c.weight, c.mass, c.centroid);
    }
    Ok(())
}
