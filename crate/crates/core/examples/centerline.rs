//! Rod model: structured solution, centerline on the cylinder and export.
//!
//! `cargo run --release --example centerline -- [out_dir]`

use std::f64::consts::PI;
use std::path::PathBuf;

use coilcontact::bvp::{solve_structured_auto, SolverOptions};
use coilcontact::geometry::{export_centerline, force_ladder_csv, reconstruct, self_intersection, ExportFormat};
use coilcontact::CoefficientModel;

fn main() -> coilcontact::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "centerline_out".into()));
    std::fs::create_dir_all(&out)?;
    let rod = CoefficientModel::rod(1.0, 1.0 / (2.0 * PI))?;
    let sol = solve_structured_auto(&rod, 4.0, &SolverOptions::default())?;
    let samples = reconstruct(&sol.u, 1.0)?;
    let last = samples.last().expect("samples");
    println!("T = 4: {} samples, rise {:.4} radii, arclength {:.4} radii", samples.len(), last.zeta, last.s);
    println!("min single-turn gap {:.3e}", self_intersection(&sol.u, 1e-7)?.min_bu);
    export_centerline(&samples, &out.join("centerline.csv"), ExportFormat::Csv)?;
    export_centerline(&samples, &out.join("centerline.json"), ExportFormat::Json)?;
    if let Some(st) = &sol.structure {
        std::fs::write(out.join("force_ladder.csv"), force_ladder_csv(st))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
