//! Contact force of a single contact interval: Dirac weights, the windowed
//! force `g` and the force ladder.
//!
//! `cargo run --example contact_force -- [x0 x1 G T]`

use coilcontact::geometry::force_ladder_csv;
use coilcontact::ContactStructure;

fn main() -> coilcontact::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let (x0, x1, g, t) = match args.as_slice() {
        [a, b, c, d] => (*a, *b, *c, *d),
        _ => (1.2, 3.55, 1.0, 5.75),
    };
    let st = ContactStructure::build(x0, x1, g, t)?;
    println!("contact [{x0}, {x1}] on [0, {t}], G = {g}");
    println!("P = {}  p = {:.4}  g1 = {:.6}  g2 = {:.6}", st.big_p(), st.p(), st.g1(), st.g2());
    println!("p g1 + (1 - p) g2 = {:.12}", st.p() * st.g1() + (1.0 - st.p()) * st.g2());
    println!("total mass = {:.6}", st.total_mass());
    println!("g(x), right-continuous:");
    for (a, b, v) in st.profile().segments(x0, x1 + 1.0) {
        println!("  [{a:.4}, {b:.4})  {v:.6}   window sum at midpoint {:.6}", st.eval_g_window(0.5 * (a + b)));
    }
    print!("{}", force_ladder_csv(&st));
    Ok(())
}
