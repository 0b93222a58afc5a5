//! Run configuration files (TOML with `[grid]`, `[gamma]`, `[solver]`,
//! `[diagnostics]`). Unknown keys are errors that name the key and line.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use acpl_core::bundle::{build_seam, gauge_field_from_seam};
use acpl_core::geometry::circle_vertices;
use acpl_core::solver::{initialize, InitMode};
use acpl_core::{BoundaryCondition, BoundaryManifold, Component, GaugeField, GaugeSection, GridSpec, SeamSurface, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{IoError, IoResult};
use crate::gamma_file::read_gamma;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

/// A centred cube with `nodes` per axis, or explicit `dims`/`h`/`origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub nodes: Option<usize>,
    pub side: Option<f64>,
    pub dims: Option<Vec<usize>>,
    pub h: Option<f64>,
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKind {
    #[default]
    None,
    Points,
    Circle,
    /// Two coaxial circles at heights `±separation/2`.
    Rings,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    #[serde(default)]
    pub kind: GammaKind,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub separation: Option<f64>,
    pub vertices: Option<usize>,
    pub path: Option<PathBuf>,
    /// Shift Γ by the grid offset so it avoids nodes and edges.
    #[serde(default = "yes")]
    pub offset: bool,
}

fn yes() -> bool {
    true
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            kind: GammaKind::None,
            points: Vec::new(),
            center: None,
            radius: None,
            separation: None,
            vertices: None,
            path: None,
            offset: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub eps_schedule: Vec<f64>,
    pub tau: f64,
    pub tol_r: f64,
    pub max_iters: usize,
    pub bc: BoundaryCondition,
    pub init: InitMode,
    pub seed: u64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Starting section when `init = "checkpoint"`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            eps_schedule: d.eps_schedule,
            tau: d.tau,
            tol_r: d.tol_r,
            max_iters: d.max_iters,
            bc: d.bc,
            init: d.init,
            seed: d.seed,
            cg_tol: d.cg_tol,
            cg_max_iters: d.cg_max_iters,
            checkpoint: None,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            eps_schedule: self.eps_schedule.clone(),
            tau: self.tau,
            tol_r: self.tol_r,
            max_iters: self.max_iters,
            bc: self.bc,
            init: self.init,
            seed: self.seed,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
        }
    }
}

/// Diagnostics run after `solve`; the same options exist as `diagnose` flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub nodal_mesh: bool,
    /// Number of Hessian eigenvalues (0 = skip).
    pub spectrum_k: usize,
    /// Ball centres for monotonicity profiles.
    pub monotonicity: Vec<Vec<f64>>,
    pub lambda: f64,
    /// Interior region `{ρ > delta}` for the discrepancy bounds.
    pub delta: Option<f64>,
}

pub fn parse_config(text: &str) -> IoResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| IoError::Config(e.to_string().trim_end().to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> IoResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut cfg = parse_config(&text)?;
    // Relative paths inside the file are relative to the file.
    let base = path.parent().unwrap_or(Path::new(""));
    if let Some(p) = cfg.gamma.path.as_mut() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    if let Some(p) = cfg.solver.checkpoint.as_mut() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

fn point(v: &[f64], dim: usize, what: &str) -> IoResult<[f64; 3]> {
    if v.len() != dim {
        return Err(IoError::Config(format!("{what}: expected {dim} coordinates, found {}", v.len())));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(v);
    Ok(p)
}

/// Grid, Γ, seam and starting section described by a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: GridSpec,
    pub gamma: BoundaryManifold,
    pub seam: SeamSurface,
    pub start: GaugeSection,
}

impl RunConfig {
    fn check(&self) -> IoResult<()> {
        let g = &self.grid;
        let cube = g.nodes.is_some() || g.side.is_some();
        let explicit = g.dims.is_some() || g.h.is_some() || g.origin.is_some();
        if cube == explicit {
            return Err(IoError::Config("[grid] needs either `nodes` + `side` or `dims` + `h` + `origin`".into()));
        }
        if self.solver.init == InitMode::Checkpoint && self.solver.checkpoint.is_none() {
            return Err(IoError::Config("init = \"checkpoint\" needs `checkpoint = <path>`".into()));
        }
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.solver_config()
    }

    pub fn grid_spec(&self) -> IoResult<GridSpec> {
        let g = &self.grid;
        match (g.nodes, g.side, &g.dims, g.h, &g.origin) {
            (Some(n), Some(side), None, None, None) => Ok(GridSpec::centered(g.dim, n, side)?),
            (None, None, Some(d), Some(h), Some(o)) => Ok(GridSpec::new(g.dim, d, h, o)?),
            _ => Err(IoError::Config("[grid] needs either `nodes` + `side` or `dims` + `h` + `origin`".into())),
        }
    }

    pub fn boundary(&self, grid: &GridSpec) -> IoResult<BoundaryManifold> {
        let c = &self.gamma;
        let dim = self.grid.dim;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| IoError::Config(format!("[gamma] kind {:?} needs `{key}`", c.kind)));
        let gamma = match c.kind {
            GammaKind::None => return Ok(BoundaryManifold::empty(dim.max(2))?),
            GammaKind::Points => {
                let pts = c.points.iter().map(|p| point(p, 2, "gamma.points")).collect::<IoResult<Vec<_>>>()?;
                BoundaryManifold::points(&pts)?
            }
            GammaKind::Circle => {
                let r = need(c.radius, "radius")?;
                let centre = c.center.as_deref().map(|v| point(v, 3, "gamma.center")).transpose()?.unwrap_or([0.0; 3]);
                let n = c.vertices.unwrap_or_else(circle_vertices);
                BoundaryManifold::new(3, vec![Component::circle(centre, r, n)])?
            }
            GammaKind::Rings => {
                let r = need(c.radius, "radius")?;
                let d = need(c.separation, "separation")?;
                let n = c.vertices.unwrap_or_else(circle_vertices);
                BoundaryManifold::new(
                    3,
                    vec![Component::circle([0.0, 0.0, -0.5 * d], r, n), Component::circle([0.0, 0.0, 0.5 * d], r, n)],
                )?
            }
            GammaKind::File => {
                let p = c.path.as_ref().ok_or_else(|| IoError::Config("[gamma] kind \"file\" needs `path`".into()))?;
                read_gamma(p, dim)?
            }
        };
        if gamma.dim() != dim {
            return Err(IoError::Config(format!("Γ is {}-dimensional but the grid is {dim}-dimensional", gamma.dim())));
        }
        if c.offset && !gamma.is_empty() {
            Ok(gamma.offset_for_grid(grid)?)
        } else {
            Ok(gamma)
        }
    }

    pub fn setup(&self) -> IoResult<Setup> {
        let grid = self.grid_spec()?;
        let gamma = self.boundary(&grid)?;
        let (seam, gauge) = if gamma.is_empty() {
            (SeamSurface::empty(), Arc::new(GaugeField::trivial(&grid)))
        } else {
            let seam = build_seam(&gamma, &grid)?;
            let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
            (seam, gauge)
        };
        let s = &self.solver;
        let eps0 = s.eps_schedule[0];
        let start = match s.init {
            InitMode::Checkpoint => {
                let path = s.checkpoint.as_ref().expect("checked in parse");
                let ck = Checkpoint::load(path)?;
                if ck.section.grid != grid {
                    return Err(IoError::Config(format!("{}: checkpoint grid differs from [grid]", path.display())));
                }
                if *ck.section.gauge != *gauge {
                    return Err(IoError::Config(format!("{}: checkpoint gauge differs from the configured Γ", path.display())));
                }
                GaugeSection::new(grid, gauge, ck.section.u, eps0, s.bc)?
            }
            mode => initialize(&grid, gauge, &seam, mode, eps0, s.bc, s.seed)?,
        };
        Ok(Setup { grid, gamma, seam, start })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUNCTURE: &str = r#"
[grid]
dim = 2
nodes = 33
side = 2.0

[gamma]
kind = "points"
points = [[0.0, 0.0]]

[solver]
eps_schedule = [0.2]
"#;

    #[test]
    fn puncture_setup() {
        let cfg = parse_config(PUNCTURE).unwrap();
        assert_eq!(cfg.solver.tau, 1.0);
        let s = cfg.setup().unwrap();
        assert_eq!(s.gamma.components().len(), 1);
        assert!(s.start.gauge.flipped_count() > 0);
        assert_eq!(s.start.eps, 0.2);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let text = PUNCTURE.replace("side = 2.0", "side = 2.0\nspacing = 0.1");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("spacing"), "{e}");
        assert!(e.contains("line 6"), "{e}");
        let e = parse_config(&PUNCTURE.replace("[solver]", "[solver]\ntolerance = 1")).unwrap_err().to_string();
        assert!(e.contains("tolerance") && e.contains("line 12"), "{e}");
    }

    #[test]
    fn invalid_values() {
        assert!(parse_config(&PUNCTURE.replace("[0.2]", "[0.1, 0.2]")).is_err());
        assert!(parse_config(&PUNCTURE.replace("nodes = 33\n", "")).is_ok_and(|c| c.grid_spec().is_err()));
        let c = parse_config(&PUNCTURE.replace("[[0.0, 0.0]]", "[[0.0, 0.0, 0.0]]")).unwrap();
        assert!(c.setup().is_err());
        assert!(parse_config(&PUNCTURE.replace("[solver]", "[solver]\ninit = \"checkpoint\"")).is_err());
    }
}
