//! All verification groups with default options.
//!
//! `cargo run --release --example verify`

use coilcontact::verify::{run_all, VerifyOptions};

fn main() {
    for g in run_all(&VerifyOptions::default()) {
        println!("{:<13} {:?}", g.group, g.status);
        for c in &g.checks {
            println!("    {:<24} {:>10.3e}  limit {:.1e}  {}", c.name, c.value, c.limit, if c.pass { "ok" } else { "FAIL" });
        }
    }
}
