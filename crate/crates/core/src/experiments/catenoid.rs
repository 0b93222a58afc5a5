use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bundle::{band_seam, build_seam, gauge_field_from_seam, SeamSurface};
use crate::diagnostics::{extract_nodal_set, varifold};
use crate::energy::{total_energy, sigma_constant};
use crate::error::{Error, Result};
use crate::geometry::{circle_vertices, BoundaryManifold, Component};
use crate::grid::{BoundaryCondition, GridSpec};
use crate::solver::{continuation, initialize, InitMode, SolverConfig};

use super::{catenary_area_oracle, ExperimentReport, ExperimentRun, StageSummary, Verdict};

/// Γ = two coaxial circles of radius `radius` at heights `±separation/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CatenoidParams {
    pub radius: f64,
    pub separation: f64,
    pub nodes: usize,
    pub side: f64,
    pub eps_schedule: Vec<f64>,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for CatenoidParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            separation: 0.5,
            nodes: 96,
            side: 4.0,
            eps_schedule: alloc::vec![0.1, 0.05],
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

/// Solves from two starts (two flat disks; the band joining the circles) and
/// keeps the lower final energy.
pub fn run_catenoid(p: &CatenoidParams) -> Result<ExperimentRun> {
    let grid = GridSpec::centered(3, p.nodes, p.side)?;
    let z = 0.5 * p.separation;
    let rings = alloc::vec![
        Component::circle([0.0, 0.0, -z], p.radius, circle_vertices()),
        Component::circle([0.0, 0.0, z], p.radius, circle_vertices()),
    ];
    let gamma = BoundaryManifold::new(3, rings)?.offset_for_grid(&grid)?;
    let seams: [(&str, SeamSurface); 2] = [("disks", build_seam(&gamma, &grid)?), ("band", band_seam(&gamma, &grid, 0, 1)?)];
    let cfg = SolverConfig {
        eps_schedule: p.eps_schedule.clone(),
        ..p.solver.clone()
    };
    let eps = *p.eps_schedule.last().expect("non-empty schedule");
    let mut runs = Vec::new();
    for (_, seam) in &seams {
        let gauge = Arc::new(gauge_field_from_seam(seam, &grid));
        let start = initialize(&grid, gauge.clone(), seam, InitMode::SeamProfile, p.eps_schedule[0], BoundaryCondition::Dirichlet, p.seed)?;
        let competitor = total_energy(&initialize(&grid, gauge, seam, InitMode::SeamProfile, eps, BoundaryCondition::Dirichlet, p.seed)?);
        runs.push((continuation(&start, &cfg)?, competitor));
    }
    let energy = |k: usize| runs[k].0.stages.last().expect("stages").outcome.report.total;
    let pick = usize::from(energy(1) < energy(0));

    let (cont, competitor) = &runs[pick];
    let last = &cont.stages.last().expect("stages").outcome;
    let mut rep = ExperimentReport::new("catenoid", &last.section, &p.eps_schedule);
    for st in &cont.stages {
        rep.stages.push(StageSummary::from_outcome(&st.outcome));
    }
    rep.put("separation", p.separation);
    rep.put("energy_disks_start", energy(0));
    rep.put("energy_band_start", energy(1));
    rep.put("chosen_start", pick as f64);
    let mass = varifold(&last.section).total_mass();
    rep.put("mass", mass);
    let t = extract_nodal_set(&last.section).topology;
    rep.topology = Some(t);
    rep.put("components", t.components as f64);

    let disks = 2.0 * core::f64::consts::PI * p.radius * p.radius;
    let oracle = match catenary_area_oracle(p.radius, p.separation) {
        Ok(c) => Some(c.area),
        Err(Error::NoCatenary) => None,
        Err(e) => return Err(e),
    };
    rep.oracle_area = oracle;
    let reference = oracle.map_or(disks, |a| a.min(disks));
    rep.put("reference_area", reference);
    rep.put("mass_over_reference", mass / reference);
    rep.verdicts.push(Verdict::within("mass_over_reference", mass / reference, 0.95, 1.05));
    rep.verdicts.push(Verdict::equals(
        "components_match_reference",
        t.components as f64,
        if oracle.is_some_and(|a| a < disks) { 1.0 } else { 2.0 },
    ));
    rep.verdicts.push(Verdict::at_most("mass_below_competitor", mass, competitor / (2.0 * sigma_constant())));

    let (_, seam) = seams.into_iter().nth(pick).expect("two seams");
    let sections = runs.swap_remove(pick).0.stages.into_iter().map(|st| st.outcome.section).collect();
    Ok(ExperimentRun {
        report: rep,
        sections,
        gamma,
        seam,
    })
}
