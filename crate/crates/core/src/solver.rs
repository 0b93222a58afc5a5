//! Semi-implicit gradient flow with truncation, and ε-continuation.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bundle::{GaugeField, GaugeSection, SeamSurface};
use crate::energy::{self, potential, potential_prime, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, GridSpec};
use crate::linalg::conjugate_gradient;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    SeamProfile,
    Random,
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Strictly decreasing interface widths.
    pub eps_schedule: Vec<f64>,
    /// Dimensionless step in `(0, 1]`.
    pub tau: f64,
    /// Stop when `sup |ε²Δ_σu − W′(u)| ≤ tol_r` over free nodes.
    pub tol_r: f64,
    pub max_iters: usize,
    pub bc: BoundaryCondition,
    pub init: InitMode,
    pub seed: u64,
    /// Relative residual of the inner conjugate-gradient solve.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_schedule: alloc::vec![0.2, 0.1, 0.05],
            tau: 1.0,
            tol_r: 1e-6,
            max_iters: 20_000,
            bc: BoundaryCondition::Dirichlet,
            init: InitMode::SeamProfile,
            seed: 0,
            cg_tol: 1e-10,
            cg_max_iters: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_schedule.is_empty() {
            return Err(Error::InvalidConfig("empty eps schedule".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidConfig("eps values must be positive".into()));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("eps schedule must be strictly decreasing".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig(format!("tau = {} not in (0, 1]", self.tau)));
        }
        if !(self.tol_r > 0.0) {
            return Err(Error::InvalidConfig("tol_r must be positive".into()));
        }
        if !(self.cg_tol > 0.0) || self.cg_max_iters == 0 {
            return Err(Error::InvalidConfig("invalid inner solver settings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    /// Energy at the start and after every accepted step.
    pub energy: Vec<f64>,
    /// Residual sup-norm at the same points.
    pub residual: Vec<f64>,
    /// Step size used for every accepted step.
    pub tau: Vec<f64>,
    pub rejected: usize,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxItersExceeded,
    /// The step size collapsed without reaching the tolerance.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub section: GaugeSection,
    pub trace: SolveTrace,
    pub status: SolveStatus,
    pub report: EnergyReport,
}

/// Starting section. `SeamProfile` sets `u = tanh(dist(x, seam)/(ε√2))` in the
/// seam's gauge, `Random` draws `u` uniformly from `[−0.5, 0.5]`. Dirichlet
/// boundary nodes are set to +1.
pub fn initialize(
    grid: &GridSpec,
    gauge: Arc<GaugeField>,
    seam: &SeamSurface,
    mode: InitMode,
    eps: f64,
    bc: BoundaryCondition,
    seed: u64,
) -> Result<GaugeSection> {
    let mut u = alloc::vec![0.0; grid.len()];
    match mode {
        InitMode::SeamProfile => par::fill(&mut u, |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = energy::heteroclinic(seam.distance(&grid.position(start + k)), eps);
            }
        }),
        InitMode::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            u.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..=0.5));
        }
        InitMode::Checkpoint => {
            return Err(Error::InvalidConfig(
                "checkpoint initialisation needs a loaded section".into(),
            ))
        }
    }
    if bc == BoundaryCondition::Dirichlet {
        for (x, v) in u.iter_mut().enumerate() {
            if grid.is_boundary(x) {
                *v = 1.0;
            }
        }
    }
    GaugeSection::new(*grid, gauge, u, eps, bc)
}

struct Problem<'a> {
    grid: &'a GridSpec,
    gauge: &'a GaugeField,
    free: &'a [bool],
    weight: Option<&'a [f64]>,
    eps: f64,
}

impl Problem<'_> {
    fn weight(&self, x: usize) -> f64 {
        self.weight.map_or(1.0, |w| w[x])
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let g = self.grid;
        let hn = g.cell_volume();
        let kd = 0.5 * self.eps * hn / (g.h * g.h);
        let kp = hn / self.eps;
        par::map_chunks(u.len(), |r| {
            let (mut d, mut p) = (0.0, 0.0);
            for (x, c) in g.nodes_in(r) {
                for axis in 0..g.dim {
                    if c[axis] + 1 < g.dims[axis] {
                        let diff = u[x] - self.gauge.sign(GridSpec::edge_index(x, axis)) * u[x + g.stride(axis)];
                        d += diff * diff;
                    }
                }
                p += self.weight(x) * potential(u[x]);
            }
            (d, p)
        })
        .into_iter()
        .fold((0.0, 0.0), |(d, p), (dc, pc)| (d + dc, p + pc))
        .into_energy(kd, kp)
    }

    fn residual_sup(&self, u: &[f64]) -> f64 {
        let e2 = self.eps * self.eps;
        par::max(u.len(), |r| {
            let mut m: f64 = 0.0;
            for (x, c) in self.grid.nodes_in(r) {
                if self.free[x] {
                    let lap = energy::laplacian_of(self.grid, self.gauge, u, x, c);
                    m = m.max((e2 * lap - self.weight(x) * potential_prime(u[x])).abs());
                }
            }
            m
        })
    }

    /// `(I − c Δ_σ)` on free nodes with fixed neighbours dropped; identity on fixed nodes.
    fn apply(&self, ops: &Couplings, c: f64, v: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let k = c / (g.h * g.h);
        let n = v.len();
        par::fill(out, |start, chunk| {
            let end = start + chunk.len();
            for ((o, vx), d) in chunk.iter_mut().zip(&v[start..end]).zip(&ops.degree[start..end]) {
                *o = vx * (1.0 + k * d);
            }
            for axis in 0..g.dim {
                let st = g.stride(axis);
                let cf = &ops.forward[axis];
                let fe = end.min(n.saturating_sub(st));
                if fe > start {
                    for ((o, cx), vy) in chunk[..fe - start].iter_mut().zip(&cf[start..fe]).zip(&v[start + st..fe + st]) {
                        *o -= k * cx * vy;
                    }
                }
                let bs = start.max(st);
                if end > bs {
                    for ((o, cy), vy) in chunk[bs - start..].iter_mut().zip(&cf[bs - st..end - st]).zip(&v[bs - st..end - st]) {
                        *o -= k * cy * vy;
                    }
                }
            }
            for ((o, vx), f) in chunk.iter_mut().zip(&v[start..end]).zip(&self.free[start..end]) {
                if !f {
                    *o = *vx;
                }
            }
        });
    }

    fn rhs(&self, tau: f64, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let k = tau * self.eps * self.eps / (g.h * g.h);
        let mut b = alloc::vec![0.0; u.len()];
        par::fill(&mut b, |start, chunk| {
            for ((x, cc), o) in g.nodes_in(start..start + chunk.len()).zip(chunk.iter_mut()) {
                if !self.free[x] {
                    *o = u[x];
                    continue;
                }
                let mut fixed = 0.0;
                for axis in 0..g.dim {
                    let st = g.stride(axis);
                    if cc[axis] + 1 < g.dims[axis] && !self.free[x + st] {
                        fixed += self.gauge.sign(GridSpec::edge_index(x, axis)) * u[x + st];
                    }
                    if cc[axis] > 0 && !self.free[x - st] {
                        fixed += self.gauge.sign(GridSpec::edge_index(x - st, axis)) * u[x - st];
                    }
                }
                *o = u[x] - tau * self.weight(x) * potential_prime(u[x]) + k * fixed;
            }
        });
        b
    }

    fn run(&self, mut u: Vec<f64>, cfg: &SolverConfig) -> Result<(Vec<f64>, SolveTrace, SolveStatus)> {
        let mut trace = SolveTrace::default();
        let mut e = self.energy(&u);
        let mut r = self.residual_sup(&u);
        trace.energy.push(e);
        trace.residual.push(r);
        let mut tau = cfg.tau;
        let mut successes = 0;
        let mut status = SolveStatus::MaxItersExceeded;
        let mut v = alloc::vec![0.0; u.len()];
        let ops = Couplings::new(self.grid, self.gauge, self.free);
        for _ in 0..cfg.max_iters {
            if r <= cfg.tol_r {
                status = SolveStatus::Converged;
                break;
            }
            let b = self.rhs(tau, &u);
            v.copy_from_slice(&u);
            let c = tau * self.eps * self.eps;
            let out = conjugate_gradient(|x, y| self.apply(&ops, c, x, y), &b, &mut v, cfg.cg_tol, cfg.cg_max_iters)?;
            trace.cg_iterations += out.iterations;
            for (x, val) in v.iter_mut().enumerate() {
                if self.free[x] {
                    *val = val.clamp(-1.0, 1.0);
                }
            }
            let e_new = self.energy(&v);
            if e_new <= e {
                core::mem::swap(&mut u, &mut v);
                e = e_new;
                r = self.residual_sup(&u);
                trace.energy.push(e);
                trace.residual.push(r);
                trace.tau.push(tau);
                successes += 1;
                if successes >= 5 && tau < cfg.tau {
                    tau = cfg.tau;
                    successes = 0;
                }
            } else {
                trace.rejected += 1;
                tau *= 0.5;
                successes = 0;
                if tau < 1e-12 * cfg.tau {
                    status = SolveStatus::Stalled;
                    break;
                }
            }
        }
        if status != SolveStatus::Converged && r <= cfg.tol_r {
            status = SolveStatus::Converged;
        }
        Ok((u, trace, status))
    }
}

/// Per-edge couplings between free nodes (σ, or 0 when the edge is missing or
/// touches a fixed node) and the number of existing edges at each node.
struct Couplings {
    forward: [Vec<f64>; 3],
    degree: Vec<f64>,
}

impl Couplings {
    fn new(grid: &GridSpec, gauge: &GaugeField, free: &[bool]) -> Self {
        let n = grid.len();
        let mut forward = [Vec::new(), Vec::new(), Vec::new()];
        let mut degree = alloc::vec![0.0; n];
        for (axis, cf) in forward.iter_mut().enumerate().take(grid.dim) {
            *cf = alloc::vec![0.0; n];
            let st = grid.stride(axis);
            for (x, c) in grid.nodes_in(0..n) {
                if c[axis] + 1 < grid.dims[axis] {
                    degree[x] += 1.0;
                    degree[x + st] += 1.0;
                    if free[x] && free[x + st] {
                        cf[x] = gauge.sign(GridSpec::edge_index(x, axis));
                    }
                }
            }
        }
        Self { forward, degree }
    }
}

trait IntoEnergy {
    fn into_energy(self, kd: f64, kp: f64) -> f64;
}

impl IntoEnergy for (f64, f64) {
    fn into_energy(self, kd: f64, kp: f64) -> f64 {
        kd * self.0 + kp * self.1
    }
}

/// Minimises the energy at the section's ε with its gauge and boundary
/// condition fixed. Runs that hit the iteration cap return the last (lowest
/// energy) iterate with status `MaxItersExceeded`.
pub fn minimize(s: &GaugeSection, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let free = s.grid.free_mask(s.bc);
    let problem = Problem {
        grid: &s.grid,
        gauge: &s.gauge,
        free: &free,
        weight: None,
        eps: s.eps,
    };
    let (u, trace, status) = problem.run(s.u.clone(), cfg)?;
    let section = GaugeSection::new(s.grid, s.gauge.clone(), u, s.eps, s.bc)?;
    let report = energy::energy(&section, None);
    Ok(SolveOutcome {
        section,
        trace,
        status,
        report,
    })
}

/// Minimises `Σ (ε/2)|Du|² hⁿ + Σ a(x) W(u)/ε hⁿ` with trivial gauge over the
/// nodes marked `free`, keeping the others fixed. Its critical points solve
/// `ε²Δu = a(x)(u² − 1)u`.
pub fn minimize_weighted(
    grid: &GridSpec,
    u: Vec<f64>,
    free: &[bool],
    weight: &[f64],
    eps: f64,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveTrace, SolveStatus)> {
    cfg.validate()?;
    if u.len() != grid.len() || free.len() != grid.len() || weight.len() != grid.len() {
        return Err(Error::DimensionMismatch("weighted problem sizes".into()));
    }
    let gauge = GaugeField::trivial(grid);
    Problem {
        grid,
        gauge: &gauge,
        free,
        weight: Some(weight),
        eps,
    }
    .run(u, cfg)
}

/// Residual `ε²Δu − a(x)(u² − 1)u` of the weighted problem (trivial gauge).
pub fn weighted_residual(grid: &GridSpec, u: &[f64], weight: &[f64], eps: f64) -> Vec<f64> {
    let gauge = GaugeField::trivial(grid);
    grid.nodes_in(0..grid.len())
        .map(|(x, c)| eps * eps * energy::laplacian_of(grid, &gauge, u, x, c) - weight[x] * potential_prime(u[x]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub eps: f64,
    pub outcome: SolveOutcome,
}

#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    pub stages: Vec<Stage>,
    /// Energy of the starting section at the first ε.
    pub competitor_energy: f64,
    /// Every stage energy is at most the competitor energy.
    pub bound_holds: bool,
}

/// Solves at each ε of the schedule, warm-starting from the previous stage.
pub fn continuation(start: &GaugeSection, cfg: &SolverConfig) -> Result<ContinuationOutcome> {
    cfg.validate()?;
    let first = start.with_eps(cfg.eps_schedule[0])?;
    let competitor_energy = energy::total_energy(&first);
    let mut stages: Vec<Stage> = Vec::with_capacity(cfg.eps_schedule.len());
    let mut current = first;
    for &eps in &cfg.eps_schedule {
        let s = current.with_eps(eps)?;
        let outcome = minimize(&s, cfg)?;
        current = outcome.section.clone();
        stages.push(Stage { eps, outcome });
    }
    let bound_holds = stages.iter().all(|s| s.outcome.report.total <= competitor_energy);
    Ok(ContinuationOutcome {
        stages,
        competitor_energy,
        bound_holds,
    })
}
