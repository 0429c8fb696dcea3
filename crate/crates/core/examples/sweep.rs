//! Continuation of the simple model in the domain length.
//!
//! `cargo run --release --example sweep -- [T_from T_to]`

use coilcontact::continuation::{sweep, ContinuationOptions};
use coilcontact::CoefficientModel;

fn main() -> coilcontact::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let (from, to) = match args.as_slice() {
        [a, b] => (*a, *b),
        _ => (5.0, 15.0),
    };
    let rows = sweep(&CoefficientModel::simple(), from, to, ContinuationOptions::default())?;
    println!("{:>8} {:>10} {:>10} {:>11} {:>10}", "T", "x0", "G", "beta", "F - T/2");
    for r in &rows {
        println!("{:8.4} {:10.6} {:10.6} {:11.3e} {:10.6}", r.t_len, r.x0, r.g_total, r.beta, r.energy_minus_half_t());
    }
    println!("log(2 + sqrt 3) = {:.6}", (2.0 + 3f64.sqrt()).ln());
    Ok(())
}
