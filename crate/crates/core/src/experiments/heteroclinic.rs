use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bundle::{GaugeField, GaugeSection};
use crate::diagnostics::{discrepancy, hessian_spectrum};
use crate::energy::{heteroclinic, sigma_constant};
use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, GridSpec};
use crate::solver::{minimize, SolverConfig};

use super::{free_mask, ExperimentReport, StageSummary, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroclinicParams {
    pub eps: f64,
    pub h: f64,
    /// The interval is `[−half_width, half_width]`, with `∓1` at its ends.
    pub half_width: f64,
    pub solver: SolverConfig,
}

impl Default for HeteroclinicParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            h: 0.1 / 8.0,
            half_width: 1.0,
            solver: SolverConfig {
                tol_r: 1e-8,
                ..Default::default()
            },
        }
    }
}

fn interval(eps: f64, h: f64, half_width: f64) -> Result<GaugeSection> {
    let n = libm::round(2.0 * half_width / h) as usize + 1;
    let grid = GridSpec::new(1, &[n], h, &[-0.5 * (n - 1) as f64 * h])?;
    // Odd step with a zero at the centre node.
    let mid = n / 2;
    let u = (0..n)
        .map(|i| match i.cmp(&mid) {
            core::cmp::Ordering::Less => -1.0,
            core::cmp::Ordering::Equal => 0.0,
            core::cmp::Ordering::Greater => 1.0,
        })
        .collect();
    GaugeSection::new(grid, Arc::new(GaugeField::trivial(&grid)), u, eps, BoundaryCondition::Dirichlet)
}

/// Minimiser on an interval with `∓1` boundary values, checked against `2σ`,
/// at `h` and `h/2`; plus the equipartition and stability checks.
pub fn run_heteroclinic_1d(p: &HeteroclinicParams) -> Result<(ExperimentReport, Vec<GaugeSection>)> {
    if p.h > p.eps / 4.0 {
        return Err(Error::InvalidConfig(alloc::format!("h = {} exceeds eps/4", p.h)));
    }
    let target = 2.0 * sigma_constant();
    let start = interval(p.eps, p.h, p.half_width)?;
    let coarse = minimize(&start, &p.solver)?;
    let fine = minimize(&interval(p.eps, 0.5 * p.h, p.half_width)?, &p.solver)?;
    let mut rep = ExperimentReport::new("heteroclinic_1d", &start, &[p.eps]);
    rep.stages.push(StageSummary::from_outcome(&coarse));
    rep.stages.push(StageSummary::from_outcome(&fine));

    let err = (coarse.report.total - target).abs();
    let err_fine = (fine.report.total - target).abs();
    rep.put("energy", coarse.report.total);
    rep.put("energy_target", target);
    rep.put("energy_rel_error", err / target);
    rep.put("energy_rel_error_refined", err_fine / target);
    rep.put("refinement_ratio", err / err_fine);

    // Equipartition of the sampled profile, away from the two end nodes.
    let g = start.grid;
    let sampled: Vec<f64> = (0..g.len()).map(|x| heteroclinic(g.position(x)[0], p.eps)).collect();
    let sampled = GaugeSection::new(g, start.gauge.clone(), sampled, p.eps, BoundaryCondition::Natural)?;
    let interior: Vec<bool> = (0..g.len()).map(|x| !g.is_boundary(x)).collect();
    let sup_sampled = discrepancy(&sampled).norms(Some(&interior)).sup_abs;
    let sup_solved = discrepancy(&coarse.section).norms(Some(&interior)).sup_abs;
    let xi_bound = 5.0 * p.h * p.h / (p.eps * p.eps * p.eps);
    rep.put("sup_xi_sampled", sup_sampled);
    rep.put("sup_xi_converged", sup_solved);

    let spec = hessian_spectrum(&coarse.section, &free_mask(&coarse.section), 1, 0)?;
    rep.put("lambda_min", spec.values[0]);
    rep.put("tol_eig", spec.tol_eig);

    rep.verdicts.push(Verdict::at_most("energy_rel_error", err / target, 0.01));
    rep.verdicts.push(Verdict::within("refinement_ratio", err / err_fine, 4.0 * 0.7, 4.0 * 1.3));
    rep.verdicts.push(Verdict::at_most("sampled_sup_xi", sup_sampled, xi_bound));
    rep.verdicts.push(Verdict::at_least("lambda_min", spec.values[0], -spec.tol_eig));
    Ok((rep, alloc::vec![coarse.section, fine.section]))
}
