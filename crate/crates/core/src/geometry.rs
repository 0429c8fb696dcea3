//! Physical reconstruction of the rod on the cylinder.
//!
//! The tangential coordinate `x` counts turns (`psi = 2 pi x`), the unknown
//! `u` is the axial slope `zeta'(x)`, and the centerline is
//! `(r cos psi, r sin psi, r zeta)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contact_structure::ContactStructure;
use crate::error::{Error, Result};
use crate::gridfn::{constraint_profile, cumulative_integral, fmt_f64, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterlineSample {
    /// Turns.
    pub x: f64,
    /// Angle in radians.
    pub psi: f64,
    /// Axial coordinate in cylinder radii.
    pub zeta: f64,
    pub point: [f64; 3],
    /// Arclength from the start.
    pub s: f64,
}

/// Samples the centerline at every grid node, with `zeta(0) = 0`.
pub fn reconstruct(u: &GridFunction, r: f64) -> Result<Vec<CenterlineSample>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NonPositiveRadius(r));
    }
    let zeta = cumulative_integral(u);
    let dx = u.dx();
    let speed: Vec<f64> = u.values().iter().map(|v| 2.0 * PI * r * (1.0 + v * v).sqrt()).collect();
    let mut s = 0.0;
    Ok((0..=u.n())
        .map(|i| {
            if i > 0 {
                s += 0.5 * dx * (speed[i - 1] + speed[i]);
            }
            let x = u.x(i);
            let psi = 2.0 * PI * x;
            CenterlineSample {
                x,
                psi,
                zeta: zeta[i],
                point: [r * psi.cos(), r * psi.sin(), r * zeta[i]],
                s,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub violated: bool,
    pub min_bu: f64,
    pub argmin: f64,
}

/// Smallest single-turn axial gap `zeta(x + 1) - zeta(x)` over `[0, T - 1]`.
pub fn self_intersection(u: &GridFunction, tol: f64) -> Result<IntersectionReport> {
    let bu = constraint_profile(u)?;
    let (j, &min_bu) = bu
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("window profile has nodes");
    Ok(IntersectionReport { violated: min_bu < -tol, min_bu, argmin: bu.x(j) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown export format '{other}'"))),
        }
    }
}

pub fn centerline_csv(samples: &[CenterlineSample]) -> String {
    let mut out = String::from("x,psi,zeta,X,Y,Z,s\n");
    for c in samples {
        let cols = [c.x, c.psi, c.zeta, c.point[0], c.point[1], c.point[2], c.s];
        out.push_str(&cols.map(fmt_f64).join(","));
        out.push('\n');
    }
    out
}

pub fn parse_centerline_csv(text: &str) -> Result<Vec<CenterlineSample>> {
    let mut lines = text.lines();
    if lines.next() != Some("x,psi,zeta,X,Y,Z,s") {
        return Err(Error::InvalidArgument("not a centerline csv".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string())))
                .collect::<Result<_>>()?;
            if v.len() != 7 {
                return Err(Error::InvalidArgument(format!("expected 7 columns, got {}", v.len())));
            }
            Ok(CenterlineSample { x: v[0], psi: v[1], zeta: v[2], point: [v[3], v[4], v[5]], s: v[6] })
        })
        .collect()
}

pub fn export_centerline(samples: &[CenterlineSample], path: &Path, format: ExportFormat) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no centerline samples to export".into()));
    }
    let text = match format {
        ExportFormat::Csv => centerline_csv(samples),
        ExportFormat::Json => serde_json::to_string_pretty(samples)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Contact-force ladder as CSV with columns `x_mod1,turn,weight`.
pub fn force_ladder_csv(structure: &ContactStructure) -> String {
    let mut out = String::from("x_mod1,turn,weight\n");
    for (x, turn, w) in structure.force_ladder() {
        let _ = writeln!(out, "{},{turn},{}", fmt_f64(x), fmt_f64(w));
    }
    out
}
