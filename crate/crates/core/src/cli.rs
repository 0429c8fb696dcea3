//! Command-line front end.
//!
//! Settings come from a flat `key = value` file, then from flags; flags win.
//! Every written artifact gets a `<name>.manifest.json` next to it with the
//! config hash and the crate version. Failures print a JSON object on stderr
//! and exit with 2 (config), 3 (solver), 4 (io); a failed `verify` exits 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bvp::{solve_structured_auto, solve_unconstrained, SolverOptions};
use crate::coefficients::CoefficientModel;
use crate::contact_structure::WeightRule;
use crate::continuation::{history_csv, sweep, ContinuationOptions};
use crate::error::{Error, Result};
use crate::geometry::{centerline_csv, force_ladder_csv, reconstruct, self_intersection, ExportFormat};
use crate::gridfn::{constraint_profile, contact_set, default_contact_tol, fmt_f64, grid_csv, Solution};
use crate::minimize::{asymmetry_demo, discrete_contact_tol, multistart, recover_multiplier, ConstraintKind, DiscreteProblem};
use crate::profile::PiecewiseConstant;
use crate::verify::{run_all, VerifyOptions};
use crate::SEED_ENV;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Contact solution by structured shooting.
    Solve,
    /// Symmetric stationary point without the window constraint.
    Unconstrained,
    /// Direct discretized minimization with multiplier recovery.
    Minimize,
    /// Continuation of the contact branch in T.
    Sweep,
    /// Run the invariant groups.
    Verify,
    /// Symmetric versus unrestricted minima of a double-well energy.
    DemoAsymmetry,
    /// Centerline and contact-force ladder of a solution.
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Unconstrained => "unconstrained",
            Command::Minimize => "minimize",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
            Command::DemoAsymmetry => "demo-asymmetry",
            Command::Export => "export",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coilcontact", version, about = "Self-contact of a rod coiled on a cylinder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Any config key, e.g. `--set minimize.n=128`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long = "T", global = true)]
    pub t_len: Option<String>,
    #[arg(long = "T-from", global = true)]
    pub t_from: Option<String>,
    #[arg(long = "T-to", global = true)]
    pub t_to: Option<String>,
    #[arg(long, global = true)]
    pub r: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub h: Option<String>,
    /// Cells per unit length for `minimize`.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Arctan steepness for `sweep`.
    #[arg(long = "A", global = true)]
    pub steepness: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub format: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

const KEYS: &[(&str, &str)] = &[
    ("model", "simple"),
    ("rod.r", "1"),
    ("rod.alpha", "0.15915494309189535"),
    ("rod.M", ""),
    ("rod.B", ""),
    ("T", "4.91635"),
    ("T_from", "5"),
    ("T_to", "30"),
    ("tol", "1e-9"),
    ("h", "1e-3"),
    ("grid.min_cells", "1000"),
    ("contact.tol", "auto"),
    ("minimize.n", "64"),
    ("minimize.seeds", "5"),
    ("minimize.tol", "1e-7"),
    ("minimize.penalty0", "10"),
    ("minimize.constrained", "true"),
    ("continuation.A", "1000"),
    ("continuation.dt", "0.5"),
    ("asymmetry.alpha", "35"),
    ("asymmetry.n", "100"),
    ("verify.oracle_T", "6"),
    ("verify.samples", "200"),
    ("verify.fault", "none"),
    ("export.format", "csv"),
    ("export.source", "structured"),
    ("seed", "0"),
    ("out", "out"),
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn check_known(map: &BTreeMap<String, String>) -> Result<()> {
    for k in map.keys() {
        if !KEYS.iter().any(|(name, _)| name == k) {
            return Err(Error::Config(format!("unknown key '{k}'")));
        }
    }
    Ok(())
}

/// Resolved settings: defaults, then `COILCONTACT_SEED`, then the file, then flags.
pub fn resolve(cli: &Cli) -> Result<BTreeMap<String, String>> {
    let mut map: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    if let Ok(seed) = std::env::var(SEED_ENV) {
        map.insert("seed".into(), seed);
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let file = parse_config_text(&text)?;
        check_known(&file)?;
        map.extend(file);
    }
    let mut flags = BTreeMap::new();
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        flags.insert(k.trim().to_string(), v.trim().to_string());
    }
    let named = [
        ("model", &cli.model),
        ("T", &cli.t_len),
        ("T_from", &cli.t_from),
        ("T_to", &cli.t_to),
        ("rod.r", &cli.r),
        ("tol", &cli.tol),
        ("h", &cli.h),
        ("minimize.n", &cli.n),
        ("minimize.seeds", &cli.seeds),
        ("continuation.A", &cli.steepness),
        ("seed", &cli.seed),
        ("export.format", &cli.format),
    ];
    for (k, v) in named {
        if let Some(v) = v {
            flags.insert(k.to_string(), v.clone());
        }
    }
    if let Some(a) = &cli.alpha {
        let key = if cli.command == Command::DemoAsymmetry { "asymmetry.alpha" } else { "rod.alpha" };
        flags.insert(key.into(), a.clone());
    }
    if let Some(out) = &cli.out {
        flags.insert("out".into(), out.display().to_string());
    }
    check_known(&flags)?;
    map.extend(flags);
    Ok(map)
}

/// Typed, validated settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub model: CoefficientModel,
    pub model_name: String,
    pub t_len: f64,
    pub t_from: f64,
    pub t_to: f64,
    pub solver: SolverOptions,
    pub cells_per_unit: usize,
    pub seeds: usize,
    pub minimize_tol: f64,
    pub penalty0: f64,
    pub constrained: bool,
    pub continuation: ContinuationOptions,
    pub asym_alpha: f64,
    pub asym_n: usize,
    pub oracle_t_len: f64,
    pub samples: usize,
    pub weight_rule: WeightRule,
    pub format: ExportFormat,
    pub export_unconstrained: bool,
    pub rng_seed: u64,
    pub out: PathBuf,
    /// SHA-256 of the canonical `key=value` listing.
    pub config_hash: String,
    pub radius: f64,
    /// Contact detection tolerance; `None` picks a grid-dependent default.
    pub contact_tol: Option<f64>,
}

fn num(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let raw = &map[key];
    let v: f64 = raw.parse().map_err(|_| Error::Config(format!("{key}: '{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key} must be finite")));
    }
    Ok(v)
}

fn int(map: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    let raw = &map[key];
    raw.parse().map_err(|_| Error::Config(format!("{key}: '{raw}' is not a non-negative integer")))
}

fn in_range(key: &str, v: f64, lo: f64, hi: f64) -> Result<f64> {
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} = {v} outside [{lo}, {hi}]")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be positive, got {v}")))
    }
}

pub fn config_hash(command: Command, map: &BTreeMap<String, String>) -> String {
    let mut text = format!("command={}\n", command.name());
    // the output location does not change any artifact
    for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "out") {
        let _ = writeln!(text, "{k}={v}");
    }
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunConfig {
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        let model_name = map["model"].clone();
        let radius = positive("rod.r", num(map, "rod.r")?)?;
        let model = match model_name.as_str() {
            "simple" => CoefficientModel::simple(),
            "rod" => {
                if !map["rod.M"].is_empty() || !map["rod.B"].is_empty() {
                    CoefficientModel::rod_from_loads(radius, num(map, "rod.M")?, num(map, "rod.B")?)
                        .map_err(|e| Error::Config(e.to_string()))?
                } else {
                    CoefficientModel::rod(radius, num(map, "rod.alpha")?).map_err(|e| Error::Config(e.to_string()))?
                }
            }
            other => return Err(Error::Config(format!("model must be 'simple' or 'rod', got '{other}'"))),
        };
        let t_len = num(map, "T")?;
        let needs_window = matches!(command, Command::Solve | Command::Minimize | Command::Export);
        if needs_window && !(t_len > 1.0) {
            return Err(Error::Config(format!("T = {t_len}: lengths T <= 1 have no constraint window")));
        }
        if command == Command::Unconstrained && !(t_len > 0.0) {
            return Err(Error::Config(format!("T must be positive, got {t_len}")));
        }
        in_range("T", t_len, f64::MIN, 1e3)?;
        let t_from = in_range("T_from", num(map, "T_from")?, 1.0 + 1e-9, 1e3)?;
        let t_to = in_range("T_to", num(map, "T_to")?, 1.0 + 1e-9, 1e3)?;
        let tol = in_range("tol", num(map, "tol")?, 1e-14, 1e-2)?;
        let h = in_range("h", num(map, "h")?, 1e-6, 0.1)?;
        let min_cells = int(map, "grid.min_cells")?;
        if !(10..=100_000).contains(&min_cells) {
            return Err(Error::Config(format!("grid.min_cells = {min_cells} outside [10, 100000]")));
        }
        let cells_per_unit = int(map, "minimize.n")?;
        if !(4..=4096).contains(&cells_per_unit) {
            return Err(Error::Config(format!("minimize.n = {cells_per_unit} outside [4, 4096]")));
        }
        let seeds = int(map, "minimize.seeds")?;
        if seeds > 256 {
            return Err(Error::Config(format!("minimize.seeds = {seeds} exceeds 256")));
        }
        let constrained = match map["minimize.constrained"].as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Config(format!("minimize.constrained must be true or false, got '{other}'"))),
        };
        let weight_rule = match map["verify.fault"].as_str() {
            "none" => WeightRule::Recurrence,
            "printed-weights" => WeightRule::Printed,
            other => return Err(Error::Config(format!("verify.fault must be none or printed-weights, got '{other}'"))),
        };
        let export_unconstrained = match map["export.source"].as_str() {
            "structured" => false,
            "unconstrained" => true,
            other => return Err(Error::Config(format!("export.source must be structured or unconstrained, got '{other}'"))),
        };
        let format = map["export.format"].parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        let rng_seed = map["seed"]
            .parse()
            .map_err(|_| Error::Config(format!("seed: '{}' is not an unsigned integer", map["seed"])))?;
        let contact_tol = match map["contact.tol"].as_str() {
            "auto" => None,
            _ => Some(in_range("contact.tol", num(map, "contact.tol")?, 0.0, 1.0)?),
        };
        let asym_n = int(map, "asymmetry.n")?;
        if !(8..=2000).contains(&asym_n) {
            return Err(Error::Config(format!("asymmetry.n = {asym_n} outside [8, 2000]")));
        }
        Ok(RunConfig {
            command,
            model,
            model_name,
            t_len,
            t_from,
            t_to,
            solver: SolverOptions {
                tol,
                h,
                min_cells_per_unit: min_cells,
                max_cells_per_unit: min_cells.max(SolverOptions::default().max_cells_per_unit),
                ..SolverOptions::default()
            },
            cells_per_unit,
            seeds,
            minimize_tol: in_range("minimize.tol", num(map, "minimize.tol")?, 1e-12, 1e-2)?,
            penalty0: positive("minimize.penalty0", num(map, "minimize.penalty0")?)?,
            constrained,
            continuation: ContinuationOptions {
                steepness: positive("continuation.A", num(map, "continuation.A")?)?,
                dt: positive("continuation.dt", num(map, "continuation.dt")?)?,
                tol,
                h,
                ..ContinuationOptions::default()
            },
            asym_alpha: positive("asymmetry.alpha", num(map, "asymmetry.alpha")?)?,
            asym_n,
            oracle_t_len: in_range("verify.oracle_T", num(map, "verify.oracle_T")?, 1.0 + 1e-9, 100.0)?,
            samples: int(map, "verify.samples")?,
            weight_rule,
            format,
            export_unconstrained,
            rng_seed,
            out: PathBuf::from(&map["out"]),
            config_hash: config_hash(command, map),
            radius,
            contact_tol,
        })
    }
}

/// Result of a run: exit status and the summary printed on stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Value,
}

#[derive(Serialize)]
struct ArtifactManifest<'a> {
    artifact: &'a str,
    command: &'a str,
    config_sha256: &'a str,
    version: &'a str,
    content_sha256: String,
}

fn write_artifact(cfg: &RunConfig, name: &str, content: &str, written: &mut Vec<String>) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    std::fs::write(&path, content)?;
    let manifest = ArtifactManifest {
        artifact: name,
        command: cfg.command.name(),
        config_sha256: &cfg.config_hash,
        version: VERSION,
        content_sha256: Sha256::digest(content.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
    };
    std::fs::write(cfg.out.join(format!("{name}.manifest.json")), serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(path.display().to_string());
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn structured_or_unconstrained(cfg: &RunConfig, unconstrained: bool) -> Result<Solution> {
    if unconstrained {
        solve_unconstrained(&cfg.model, cfg.t_len, &cfg.solver)
    } else {
        solve_structured_auto(&cfg.model, cfg.t_len, &cfg.solver)
    }
}

fn solution_outputs(cfg: &RunConfig, sol: &Solution, written: &mut Vec<String>) -> Result<Value> {
    write_artifact(cfg, "solution.csv", &grid_csv(&sol.u, &cfg.model, &sol.rhs), written)?;
    let mut summary = serde_json::to_value(sol.manifest())?;
    if let Some(st) = &sol.structure {
        summary["structure"] = serde_json::to_value(st)?;
        write_artifact(cfg, "force_ladder.csv", &force_ladder_csv(st), written)?;
    }
    if sol.u.t_len() > 1.0 {
        let tol = cfg.contact_tol.unwrap_or_else(|| constraint_profile(&sol.u).map(|bu| default_contact_tol(&bu)).unwrap_or(0.0));
        summary["contact_set"] = serde_json::to_value(contact_set(&sol.u, tol)?)?;
        summary["self_intersection"] = serde_json::to_value(self_intersection(&sol.u, 1e-7)?)?;
    }
    write_artifact(cfg, "solution.json", &to_json(&summary)?, written)?;
    Ok(summary)
}

fn multipliers_csv(positions: &[f64], weights: &[f64]) -> String {
    let mut out = String::from("position,weight\n");
    for (x, w) in positions.iter().zip(weights) {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*w));
    }
    out
}

/// Executes a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let mut written = Vec::new();
    let mut exit_code = 0;
    let mut summary = match cfg.command {
        Command::Solve => solution_outputs(cfg, &solve_structured_auto(&cfg.model, cfg.t_len, &cfg.solver)?, &mut written)?,
        Command::Unconstrained => {
            solution_outputs(cfg, &solve_unconstrained(&cfg.model, cfg.t_len, &cfg.solver)?, &mut written)?
        }
        Command::Minimize => {
            let kind = if cfg.constrained { ConstraintKind::Inequality } else { ConstraintKind::None };
            let mut prob = DiscreteProblem::new(cfg.model.clone(), cfg.t_len, cfg.cells_per_unit, kind)
                .map_err(|e| Error::Config(e.to_string()))?;
            prob.penalty0 = cfg.penalty0;
            let res = multistart(&prob, cfg.seeds, cfg.rng_seed, cfg.minimize_tol)?;
            write_artifact(cfg, "solution.csv", &grid_csv(&res.u, &cfg.model, &PiecewiseConstant::constant(0.0)), &mut written)?;
            write_artifact(cfg, "multipliers.csv", &multipliers_csv(&res.multiplier_positions(), &res.multipliers), &mut written)?;
            let rec = recover_multiplier(&res.u, &cfg.model)?;
            let contact = contact_set(&res.u, cfg.contact_tol.unwrap_or_else(|| discrete_contact_tol(prob.dx())))?;
            let summary = json!({
                "T": cfg.t_len,
                "cells_per_unit": cfg.cells_per_unit,
                "constrained": cfg.constrained,
                "energy": res.energy,
                "kkt": res.kkt,
                "outer_iterations": res.outer_iterations,
                "inner_iterations": res.inner_iterations,
                "contact_set": contact,
                "recovered_mass": rec.total_mass(),
                "recovery_fit_residual": rec.fit_residual,
            });
            write_artifact(cfg, "minimize.json", &to_json(&summary)?, &mut written)?;
            summary
        }
        Command::Sweep => {
            let rows = sweep(&cfg.model, cfg.t_from, cfg.t_to, cfg.continuation)?;
            write_artifact(cfg, "history.csv", &history_csv(&rows), &mut written)?;
            let last = rows.last().copied();
            let summary = json!({
                "points": rows.len(),
                "T_from": cfg.t_from,
                "T_to": cfg.t_to,
                "last": last,
                "max_abs_beta": rows.iter().map(|r| r.beta.abs()).fold(0.0, f64::max),
            });
            write_artifact(cfg, "sweep.json", &to_json(&summary)?, &mut written)?;
            summary
        }
        Command::Verify => {
            let opts = VerifyOptions {
                model: cfg.model.clone(),
                t_len: cfg.t_len,
                oracle_t_len: cfg.oracle_t_len,
                cells_per_unit: cfg.cells_per_unit,
                seeds: cfg.seeds.min(2),
                rng_seed: cfg.rng_seed,
                samples: cfg.samples,
                weight_rule: cfg.weight_rule,
                solver: cfg.solver,
                continuation: cfg.continuation,
            };
            let groups = run_all(&opts);
            let pass = groups.iter().all(|g| g.passed());
            if !pass {
                exit_code = 1;
            }
            let summary = json!({ "pass": pass, "groups": groups });
            write_artifact(cfg, "verify.json", &to_json(&summary)?, &mut written)?;
            summary
        }
        Command::DemoAsymmetry => {
            let report = asymmetry_demo(cfg.asym_alpha, cfg.asym_n, cfg.seeds, cfg.rng_seed, cfg.minimize_tol)?;
            let mut summary = serde_json::to_value(&report)?;
            summary["gap"] = json!(report.gap());
            summary["equality_gap"] = json!(report.equality_gap());
            write_artifact(cfg, "asymmetry.json", &to_json(&summary)?, &mut written)?;
            summary
        }
        Command::Export => {
            let sol = structured_or_unconstrained(cfg, cfg.export_unconstrained)?;
            let samples = reconstruct(&sol.u, cfg.radius)?;
            match cfg.format {
                ExportFormat::Csv => write_artifact(cfg, "centerline.csv", &centerline_csv(&samples), &mut written)?,
                ExportFormat::Json => write_artifact(cfg, "centerline.json", &to_json(&samples)?, &mut written)?,
            }
            if let Some(st) = &sol.structure {
                write_artifact(cfg, "force_ladder.csv", &force_ladder_csv(st), &mut written)?;
            }
            json!({
                "samples": samples.len(),
                "arclength": samples.last().map(|s| s.s),
                "zeta_end": samples.last().map(|s| s.zeta),
            })
        }
    };
    summary["command"] = json!(cfg.command.name());
    summary["config_sha256"] = json!(cfg.config_hash);
    summary["version"] = json!(VERSION);
    summary["artifacts"] = json!(written);
    Ok(Outcome { exit_code, summary })
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

pub fn error_json(e: &Error) -> Value {
    let code = exit_code_for(e);
    let kind = match code {
        2 => "config",
        4 => "io",
        _ => "solver",
    };
    json!({ "error": kind, "message": e.to_string(), "exit_code": code })
}

/// Parses, runs, and prints; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = Error::Config(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return 2;
        }
    };
    let outcome = resolve(&cli).and_then(|map| RunConfig::from_map(cli.command, &map)).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            use std::io::Write as _;
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&o.summary).unwrap_or_default());
            o.exit_code
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code_for(&e)
        }
    }
}
