//! Structured solve of the simple model at the benchmark length.
//!
//! `cargo run --release --example benchmark_solve -- [T]`

use coilcontact::bvp::{solve_structured_auto, SolverOptions};
use coilcontact::CoefficientModel;

fn main() -> coilcontact::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.91635);
    let model = CoefficientModel::simple();
    let sol = solve_structured_auto(&model, t, &SolverOptions::default())?;
    let st = sol.structure.as_ref().expect("contact structure");
    println!("T = {t}");
    println!("x0 = {:.8}  x1 = {:.8}  G = {:.8}", st.x0(), st.x1(), st.g_total());
    println!("g1 = {:.8}  g2 = {:.8}  P = {}  p = {:.6}", st.g1(), st.g2(), st.big_p(), st.p());
    println!("energy = {:.10}  EL residual = {:.2e}", sol.energy, sol.residual_norm);
    println!("deltas:");
    for d in st.deltas() {
        println!("  x = {:.6}  weight = {:.6}", d.pos, d.weight);
    }
    println!("(g, H) per segment:");
    for s in sol.hamiltonian_segments.iter().filter(|s| s.samples > 0) {
        println!("  [{:.4}, {:.4})  g = {:.6}  H = {:.8}  dev = {:.1e}", s.start, s.end, s.g, s.h_mean, s.max_dev);
    }
    Ok(())
}
