use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bundle::{GaugeField, GaugeSection};
use crate::diagnostics::{discrepancy, first_variation, varifold, VectorField};
use crate::energy::{self, heteroclinic};
use crate::error::Result;
use crate::geometry::BoundaryManifold;
use crate::grid::{BoundaryCondition, GridSpec};
use crate::solver::{minimize_weighted, SolveOutcome, SolveTrace, SolverConfig};

use super::{plateau, ExperimentReport, StageSummary, Verdict};

/// A straight interface `{x = 0}` in a strip `[−1, 1] × [0, (rows − 1)h]`,
/// held by `∓1` at `x = ∓1` and free at the other two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarParams {
    pub eps_schedule: Vec<f64>,
    /// The spacing at each ε is `h_scale · ε²`.
    pub h_scale: f64,
    pub rows: usize,
    pub solver: SolverConfig,
}

impl Default for PlanarParams {
    fn default() -> Self {
        Self {
            eps_schedule: alloc::vec![0.2, 0.1, 0.05],
            h_scale: 0.5,
            rows: 5,
            solver: SolverConfig {
                tol_r: 1e-7,
                ..Default::default()
            },
        }
    }
}

fn solve(eps: f64, h: f64, rows: usize, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let n = libm::round(2.0 / h) as usize + 1;
    let h = 2.0 / (n - 1) as f64;
    let grid = GridSpec::new(2, &[n, rows], h, &[-1.0, 0.0])?;
    let free: Vec<bool> = (0..grid.len())
        .map(|x| {
            let i = grid.coords(x)[0];
            i != 0 && i != n - 1
        })
        .collect();
    let u: Vec<f64> = (0..grid.len())
        .map(|x| {
            let v = heteroclinic(grid.position(x)[0], eps);
            if free[x] {
                v
            } else {
                libm::copysign(1.0, v)
            }
        })
        .collect();
    let weight = alloc::vec![1.0; grid.len()];
    let (u, trace, status): (Vec<f64>, SolveTrace, _) = minimize_weighted(&grid, u, &free, &weight, eps, cfg)?;
    let section = GaugeSection::new(grid, Arc::new(GaugeField::trivial(&grid)), u, eps, BoundaryCondition::Natural)?;
    let report = energy::energy(&section, Some(&free));
    Ok(SolveOutcome {
        section,
        trace,
        status,
        report,
    })
}

/// The flat interface across the ε schedule: discrepancy decay and first
/// variation along a compactly supported normal translation.
pub fn run_planar_interface(p: &PlanarParams) -> Result<(ExperimentReport, Vec<GaugeSection>)> {
    let mut outs = Vec::new();
    for &eps in &p.eps_schedule {
        outs.push(solve(eps, p.h_scale * eps * eps, p.rows, &p.solver)?);
    }
    let mut rep = ExperimentReport::new("planar_interface", &outs[0].section, &p.eps_schedule);
    let empty = BoundaryManifold::empty(2)?;
    let mut l1 = Vec::new();
    let mut dv = Vec::new();
    for out in &outs {
        rep.stages.push(StageSummary::from_outcome(out));
        let s = &out.section;
        let width = s.grid.dims[1] as f64 * s.grid.h;
        l1.push(discrepancy(s).norms(None).l1_abs / width);
        let g: VectorField = (0..s.grid.len())
            .map(|x| [plateau(s.grid.position(x)[0], 0.3, 0.8), 0.0, 0.0])
            .collect();
        let v = varifold(s);
        let fv = first_variation(&v, s, &empty, 0.0, &g)?;
        dv.push(fv.value.abs() / (fv.mass * fv.dg_sup));
    }
    for (i, w) in l1.windows(2).enumerate() {
        rep.verdicts.push(Verdict::at_most(&alloc::format!("l1_xi_ratio_{}", i + 1), w[1] / w[0], 0.7));
    }
    for (i, r) in dv.iter().enumerate() {
        rep.verdicts.push(Verdict::at_most(&alloc::format!("first_variation_ratio_{i}"), *r, 0.02));
    }
    rep.put_series("l1_abs_xi_per_length", l1);
    rep.put_series("first_variation_ratio", dv);
    Ok((rep, outs.into_iter().map(|o| o.section).collect()))
}
