//! Double-well energy on the unit interval with and without the symmetry
//! restriction `u(x) = u(1 - x)`.
//!
//! `cargo run --release --example asymmetry -- [alpha]`

use coilcontact::minimize::asymmetry_demo;

fn main() -> coilcontact::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(35.0);
    let r = asymmetry_demo(alpha, 100, 5, 0, 1e-7)?;
    println!("alpha = {alpha}");
    println!("F(sin 2 pi x) = {:.6}  (2 pi^2 + 3 alpha/8 = {:.6})", r.f_sine, r.f_sine_exact);
    println!("int u >= 0: unrestricted {:.6}  symmetric {:.6}  gap {:.3e}", r.unrestricted_min, r.symmetric_min, r.gap());
    println!("int u  = 0: unrestricted {:.6}  symmetric {:.6}  gap {:.3e}", r.equality_unrestricted_min, r.equality_symmetric_min, r.equality_gap());
    Ok(())
}
