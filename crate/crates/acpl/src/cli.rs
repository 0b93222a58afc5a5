//! Command-line driver: `solve`, `diagnose`, `experiment`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use acpl_core::diagnostics::{
    boundary_scaling_fit, density_ratio, discrepancy, extract_nodal_set, hausdorff_sublevel, hessian_spectrum,
    interior_bound_checks, monotonicity_profile, varifold,
};
use acpl_core::energy::energy_with_gamma;
use acpl_core::experiments::{
    linspace, run_catenoid, run_disk_3d, run_heteroclinic_1d, run_planar_interface, run_puncture_2d, CatenoidParams,
    DiskParams, ExperimentReport, HeteroclinicParams, PlanarParams, PunctureParams,
};
use acpl_core::solver::continuation;
use acpl_core::{GaugeSection, SolveStatus};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checkpoint::Checkpoint;
use crate::config::{load_config, DiagnosticsConfig};
use crate::error::{IoError, IoResult};
use crate::formats::{profile_rows, write_json, write_obj, write_profile_csv, ObjMesh};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERDICT_FAILED: i32 = 3;

pub const EXPERIMENTS: [&str; 5] = ["heteroclinic1d", "puncture2d", "disk3d", "catenoid", "planar"];

#[derive(Debug, Parser)]
#[command(name = "acpl", version, about = "Allen–Cahn minimisers on the spanning line bundle over ℝⁿ∖Γ")]
pub struct Cli {
    #[command(flatten)]
    pub global: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Globals {
    /// Worker threads for the grid kernels (results do not depend on it).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, env = "ACPL_OUT", default_value = "acpl-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimise along the ε schedule of a configuration file.
    Solve(SolveArgs),
    /// Diagnostics of a saved section.
    Diagnose(DiagnoseArgs),
    /// Run a named scenario and check its verdicts.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override `solver.max_iters`.
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct DiagnoseArgs {
    pub checkpoint: PathBuf,
    /// Read further options from the `[diagnostics]` table of a config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nodal set as OBJ plus its topology as JSON.
    #[arg(long)]
    pub nodal_mesh: bool,
    /// Monotonicity profile about `p=x,y[,z]` (repeatable), CSV columns r, E, M.
    #[arg(long, value_name = "p=X,Y[,Z]")]
    pub monotonicity: Vec<String>,
    /// Λ in the monotone quantity.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Radii `lo:hi:n` for the monotonicity profiles.
    #[arg(long, value_name = "LO:HI:N")]
    pub radii: Option<String>,
    /// Lowest `k=K` Hessian eigenvalues over the free nodes.
    #[arg(long, value_name = "k=K")]
    pub spectrum: Option<String>,
    /// Discrepancy norms, and interior bounds on `{ρ > delta}` if given.
    #[arg(long, value_name = "delta=D", num_args = 0..=1, default_missing_value = "")]
    pub discrepancy: Option<String>,
    /// Boundary scaling exponents near the first component of Γ.
    #[arg(long)]
    pub scaling: bool,
    /// Hausdorff distance from `{|u| ≤ level}` to the nodal mesh.
    #[arg(long, value_name = "level=L", num_args = 0..=1, default_missing_value = "level=0.1")]
    pub hausdorff: Option<String>,
    /// Density ratios `p=x,y[,z];r=R` (repeatable).
    #[arg(long, value_name = "p=..;r=R")]
    pub density: Vec<String>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ExperimentArgs {
    pub name: String,
    /// Final ε; the schedule halves down to it from the scenario's first ε.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Full ε schedule, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps_schedule: Option<Vec<f64>>,
    /// Grid nodes per axis.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Ring separation (catenoid).
    #[arg(long)]
    pub separation: Option<f64>,
    /// Skip the Hessian spectra.
    #[arg(long)]
    pub no_spectrum: bool,
    /// Skip the refined-grid solve (puncture2d).
    #[arg(long)]
    pub no_refine: bool,
    /// Also write one checkpoint per stage.
    #[arg(long)]
    pub checkpoints: bool,
}

/// Written last, atomically, by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub threads: usize,
    pub artifacts: Vec<PathBuf>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    pub verdicts_passed: usize,
    pub verdicts_failed: Vec<String>,
}

struct Ctx {
    out: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.artifacts.push(p.clone());
        p
    }
}

#[derive(Debug)]
pub struct CmdOutcome {
    pub exit: i32,
    pub manifest: Option<RunManifest>,
}

/// Parses nothing; runs an already parsed command and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(o) => o.exit,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: &Cli) -> IoResult<CmdOutcome> {
    acpl_core::par::set_threads(cli.global.threads);
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let mut ctx = Ctx {
        out: cli.global.out_dir.clone(),
        artifacts: Vec::new(),
    };
    std::fs::create_dir_all(&ctx.out).map_err(|e| IoError::file(&ctx.out, e))?;
    let (name, config, seed, exit, verdicts) = match &cli.command {
        Command::Solve(a) => {
            let (cfg, seed, exit) = cmd_solve(a, &cli.global, &mut ctx)?;
            ("solve", cfg, seed, exit, (0, Vec::new()))
        }
        Command::Diagnose(a) => {
            let cfg = cmd_diagnose(a, &mut ctx)?;
            ("diagnose", cfg, cli.global.seed.unwrap_or(0), EXIT_OK, (0, Vec::new()))
        }
        Command::Experiment(a) => {
            let (cfg, seed, report) = cmd_experiment(a, &cli.global, &mut ctx)?;
            let failed: Vec<String> = report.verdicts.iter().filter(|v| !v.pass).map(|v| v.check.clone()).collect();
            let exit = if failed.is_empty() { EXIT_OK } else { EXIT_VERDICT_FAILED };
            ("experiment", cfg, seed, exit, (report.verdicts.len() - failed.len(), failed))
        }
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config,
        seed,
        threads: cli.global.threads,
        artifacts: ctx.artifacts.clone(),
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        exit_code: exit,
        verdicts_passed: verdicts.0,
        verdicts_failed: verdicts.1,
    };
    write_json(&ctx.out.join("manifest.json"), "run_manifest", &manifest)?;
    Ok(CmdOutcome {
        exit,
        manifest: Some(manifest),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub eps: f64,
    pub status: SolveStatus,
    pub steps: usize,
    pub rejected: usize,
    pub cg_iterations: usize,
    pub final_residual: f64,
    pub energy: acpl_core::EnergyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub competitor_energy: f64,
    pub bound_holds: bool,
    pub stages: Vec<StageRecord>,
}

fn cmd_solve(a: &SolveArgs, g: &Globals, ctx: &mut Ctx) -> IoResult<(Value, u64, i32)> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = g.seed {
        cfg.solver.seed = s;
    }
    if let Some(m) = a.max_iters {
        cfg.solver.max_iters = m;
    }
    let setup = cfg.setup()?;
    let cont = continuation(&setup.start, &cfg.solver_config())?;
    let stages: Vec<StageRecord> = cont
        .stages
        .iter()
        .map(|st| {
            let o = &st.outcome;
            StageRecord {
                eps: st.eps,
                status: o.status,
                steps: o.trace.energy.len().saturating_sub(1),
                rejected: o.trace.rejected,
                cg_iterations: o.trace.cg_iterations,
                final_residual: o.trace.residual.last().copied().unwrap_or(f64::NAN),
                energy: if setup.gamma.is_empty() { o.report.clone() } else { energy_with_gamma(&o.section, &setup.gamma) },
            }
        })
        .collect();
    let last = &cont.stages.last().expect("non-empty schedule").outcome;
    let ck = Checkpoint {
        section: last.section.clone(),
        gamma: setup.gamma.clone(),
    };
    ck.save(&ctx.path("checkpoint.acpl"))?;
    let report = SolveReport {
        competitor_energy: cont.competitor_energy,
        bound_holds: cont.bound_holds,
        stages,
    };
    write_json(&ctx.path("energy.json"), "energy_report", &report)?;
    run_diagnostics(&ck, &cfg.diagnostics, &DiagnoseArgs::default(), ctx)?;
    let converged = report.stages.iter().all(|s| s.status == SolveStatus::Converged);
    let snapshot = serde_json::to_value(&cfg)?;
    Ok((snapshot, cfg.solver.seed, if converged { EXIT_OK } else { EXIT_NOT_CONVERGED }))
}

fn cmd_diagnose(a: &DiagnoseArgs, ctx: &mut Ctx) -> IoResult<Value> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let from_file = match &a.config {
        Some(p) => load_config(p)?.diagnostics,
        None => DiagnosticsConfig::default(),
    };
    run_diagnostics(&ck, &from_file, a, ctx)?;
    Ok(json!({
        "checkpoint": a.checkpoint,
        "nodal_mesh": a.nodal_mesh || from_file.nodal_mesh,
        "monotonicity": a.monotonicity,
        "lambda": a.lambda,
        "radii": a.radii,
        "spectrum": a.spectrum,
        "discrepancy": a.discrepancy,
        "scaling": a.scaling,
        "hausdorff": a.hausdorff,
        "density": a.density,
        "diagnostics": from_file,
    }))
}

/// `key=value` options separated by `;`, restricted to `allowed` keys.
fn options(spec: &str, allowed: &[&str], what: &str) -> IoResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for kv in spec.split(';').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| IoError::Config(format!("{what}: expected key=value, got `{kv}`")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(IoError::Config(format!("{what}: unknown option `{k}` (expected {})", allowed.join(", "))));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_f64(s: &str, what: &str) -> IoResult<f64> {
    s.parse().map_err(|e| IoError::Config(format!("{what}: `{s}`: {e}")))
}

fn parse_point(s: &str, dim: usize, what: &str) -> IoResult<[f64; 3]> {
    let v = s.split(',').map(|x| parse_f64(x.trim(), what)).collect::<IoResult<Vec<f64>>>()?;
    if v.len() != dim {
        return Err(IoError::Config(format!("{what}: expected {dim} coordinates, found {}", v.len())));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(&v);
    Ok(p)
}

fn run_diagnostics(ck: &Checkpoint, file: &DiagnosticsConfig, a: &DiagnoseArgs, ctx: &mut Ctx) -> IoResult<()> {
    let s = &ck.section;
    let dim = s.grid.dim;
    let gamma = &ck.gamma;
    write_json(
        &ctx.path("diagnose_energy.json"),
        "energy",
        &if gamma.is_empty() { acpl_core::energy::energy(s, None) } else { energy_with_gamma(s, gamma) },
    )?;

    if a.nodal_mesh || file.nodal_mesh {
        let mesh = extract_nodal_set(s);
        write_obj(&ctx.path("nodal.obj"), &ObjMesh::from(&mesh))?;
        write_json(&ctx.path("nodal_topology.json"), "nodal_topology", &mesh.topology)?;
    }

    let mut centres = Vec::new();
    for m in &a.monotonicity {
        let o = options(m, &["p"], "--monotonicity")?;
        let p = o.get("p").ok_or_else(|| IoError::Config("--monotonicity needs p=...".into()))?;
        centres.push(parse_point(p, dim, "--monotonicity p")?);
    }
    for c in &file.monotonicity {
        centres.push(parse_point(&c.iter().map(f64::to_string).collect::<Vec<_>>().join(","), dim, "diagnostics.monotonicity")?);
    }
    let lambda = if a.lambda != 0.0 { a.lambda } else { file.lambda };
    for (i, p) in centres.iter().enumerate() {
        let radii = match &a.radii {
            Some(r) => {
                let parts: Vec<&str> = r.split(':').collect();
                if parts.len() != 3 {
                    return Err(IoError::Config(format!("--radii `{r}`: expected LO:HI:N")));
                }
                let n: usize = parts[2].parse().map_err(|e| IoError::Config(format!("--radii count: {e}")))?;
                linspace(parse_f64(parts[0], "--radii")?, parse_f64(parts[1], "--radii")?, n)
            }
            None => linspace(4.0 * s.eps.max(s.grid.h), 0.9 * s.grid.distance_to_box(p), 16),
        };
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(IoError::Config("monotonicity radii must be positive".into()));
        }
        let prof = monotonicity_profile(s, p, lambda, &radii);
        write_profile_csv(&ctx.path(&format!("monotonicity_{i}.csv")), &profile_rows(&prof))?;
        write_json(&ctx.path(&format!("monotonicity_{i}.json")), "monotonicity", &prof)?;
    }

    let k = match &a.spectrum {
        Some(sp) => {
            let o = options(sp, &["k"], "--spectrum")?;
            let k = o.get("k").map_or("5", String::as_str);
            k.parse::<usize>().map_err(|e| IoError::Config(format!("--spectrum k: {e}")))?
        }
        None => file.spectrum_k,
    };
    if k > 0 {
        let mask = s.grid.free_mask(s.bc);
        let report = hessian_spectrum(s, &mask, k, 0)?;
        write_json(&ctx.path("spectrum.json"), "spectrum", &report)?;
    }

    let delta = match &a.discrepancy {
        Some(d) => {
            let o = options(d, &["delta"], "--discrepancy")?;
            Some(o.get("delta").map(|v| parse_f64(v, "delta")).transpose()?)
        }
        None => file.delta.map(Some),
    };
    if let Some(delta) = delta {
        let field = discrepancy(s);
        let interior = match delta {
            Some(d) if !gamma.is_empty() => Some(interior_bound_checks(s, gamma, d, 0.0)?),
            _ => None,
        };
        write_json(
            &ctx.path("discrepancy.json"),
            "discrepancy",
            &json!({ "norms": field.norms(None), "interior": interior }),
        )?;
    }

    if a.scaling {
        let fit = boundary_scaling_fit(s, gamma, 0)?;
        write_json(&ctx.path("scaling.json"), "boundary_scaling", &fit)?;
    }

    if let Some(hs) = &a.hausdorff {
        let o = options(hs, &["level"], "--hausdorff")?;
        let level = o.get("level").map(|v| parse_f64(v, "level")).transpose()?.unwrap_or(0.1);
        let mesh = extract_nodal_set(s);
        let report = hausdorff_sublevel(s, &mesh, level, &|_| true)?;
        write_json(&ctx.path("hausdorff.json"), "hausdorff", &report)?;
    }

    if !a.density.is_empty() {
        let mut out = Vec::new();
        for d in &a.density {
            let o = options(d, &["p", "r"], "--density")?;
            let p = o.get("p").ok_or_else(|| IoError::Config("--density needs p=...".into()))?;
            let r = o.get("r").ok_or_else(|| IoError::Config("--density needs r=...".into()))?;
            out.push(density_ratio(s, &parse_point(p, dim, "--density p")?, parse_f64(r, "--density r")?));
        }
        write_json(&ctx.path("density.json"), "density_ratios", &out)?;
    }
    Ok(())
}

/// Default schedule of a scenario, cut to end at `eps` when given.
fn schedule(default: &[f64], a: &ExperimentArgs) -> IoResult<Vec<f64>> {
    if let Some(s) = &a.eps_schedule {
        return Ok(s.clone());
    }
    let Some(e) = a.eps else { return Ok(default.to_vec()) };
    if !(e > 0.0) {
        return Err(IoError::Config(format!("--eps {e} must be positive")));
    }
    let first = default[0];
    let mut out = vec![e];
    while out[0] * 2.0 <= first * (1.0 + 1e-12) {
        out.insert(0, out[0] * 2.0);
    }
    Ok(out)
}

fn save_stages(sections: &[GaugeSection], gamma: &acpl_core::BoundaryManifold, ctx: &mut Ctx) -> IoResult<()> {
    for (i, s) in sections.iter().enumerate() {
        let ck = Checkpoint {
            section: s.clone(),
            gamma: gamma.clone(),
        };
        ck.save(&ctx.path(&format!("stage{i}.acpl")))?;
    }
    Ok(())
}

pub fn experiment_report(a: &ExperimentArgs, seed: u64) -> IoResult<(ExperimentReport, Vec<GaugeSection>, acpl_core::BoundaryManifold)> {
    let empty = || acpl_core::BoundaryManifold::empty(2);
    let spectrum = !a.no_spectrum;
    match a.name.as_str() {
        "heteroclinic1d" => {
            let mut p = HeteroclinicParams::default();
            if let Some(e) = a.eps {
                p.h *= e / p.eps;
                p.eps = e;
            }
            if let Some(n) = a.nodes {
                p.h = 2.0 * p.half_width / (n as f64 - 1.0);
            }
            let (r, s) = run_heteroclinic_1d(&p)?;
            Ok((r, s, empty()?))
        }
        "planar" => {
            let mut p = PlanarParams::default();
            p.eps_schedule = schedule(&p.eps_schedule, a)?;
            let (r, s) = run_planar_interface(&p)?;
            Ok((r, s, empty()?))
        }
        "puncture2d" => {
            let mut p = PunctureParams::default();
            p.eps_schedule = schedule(&p.eps_schedule, a)?;
            p.seed = seed;
            p.spectrum = spectrum;
            if let Some(n) = a.nodes {
                p.nodes = n;
                p.refined_nodes = p.refined_nodes.map(|_| 2 * n - 1);
            }
            if a.no_refine {
                p.refined_nodes = None;
            }
            let run = run_puncture_2d(&p)?;
            Ok((run.report, run.sections, run.gamma))
        }
        "disk3d" => {
            let mut p = DiskParams::default();
            p.eps_schedule = schedule(&p.eps_schedule, a)?;
            p.seed = seed;
            p.spectrum = spectrum;
            if let Some(n) = a.nodes {
                p.nodes = n;
            }
            let run = run_disk_3d(&p)?;
            Ok((run.report, run.sections, run.gamma))
        }
        "catenoid" => {
            let mut p = CatenoidParams::default();
            p.eps_schedule = schedule(&p.eps_schedule, a)?;
            p.seed = seed;
            if let Some(n) = a.nodes {
                p.nodes = n;
            }
            if let Some(d) = a.separation {
                p.separation = d;
            }
            let run = run_catenoid(&p)?;
            Ok((run.report, run.sections, run.gamma))
        }
        other => Err(IoError::Config(format!("unknown experiment `{other}` (known: {})", EXPERIMENTS.join(", ")))),
    }
}

fn cmd_experiment(a: &ExperimentArgs, g: &Globals, ctx: &mut Ctx) -> IoResult<(Value, u64, ExperimentReport)> {
    if !EXPERIMENTS.contains(&a.name.as_str()) {
        return Err(IoError::Config(format!("unknown experiment `{}` (known: {})", a.name, EXPERIMENTS.join(", "))));
    }
    let seed = g.seed.unwrap_or(0);
    let (report, sections, gamma) = experiment_report(a, seed)?;
    write_json(&ctx.path("report.json"), "experiment_report", &report)?;
    if a.checkpoints {
        save_stages(&sections, &gamma, ctx)?;
    }
    for v in &report.verdicts {
        println!("{} {} = {:.6e} {} {:?}", if v.pass { "PASS" } else { "FAIL" }, v.check, v.value, v.relation, v.bound);
    }
    if let Some(last) = sections.last() {
        println!("mass {:.6e}", varifold(last).total_mass());
    }
    let snapshot = json!({
        "name": a.name,
        "eps": a.eps,
        "eps_schedule": a.eps_schedule,
        "nodes": a.nodes,
        "separation": a.separation,
        "no_spectrum": a.no_spectrum,
        "no_refine": a.no_refine,
    });
    Ok((snapshot, seed, report))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}
