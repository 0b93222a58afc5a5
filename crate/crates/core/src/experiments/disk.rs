use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bundle::{build_seam, gauge_field_from_seam};
use crate::diagnostics::{
    density_ratio, extract_nodal_set, first_variation, hessian_spectrum, monotonicity_profile,
    varifold, zero_parity, VectorField,
};
use crate::error::Result;
use crate::geometry::{circle_vertices, BoundaryManifold, Component, GridLoop};
use crate::grid::{BoundaryCondition, GridSpec, Point};
use crate::solver::{continuation, initialize, InitMode, SolverConfig};

use super::{free_mask, hausdorff_trend, stage_hausdorff, linspace, parity_sweep, plateau, point_of, ExperimentReport, ExperimentRun, StageSummary, Verdict};

/// Γ = a circle of radius `radius` in the plane `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskParams {
    pub radius: f64,
    pub nodes: usize,
    pub side: f64,
    pub eps_schedule: Vec<f64>,
    pub solver: SolverConfig,
    pub loops: usize,
    /// Ball radius for the density ratios at Γ.
    pub density_radius: f64,
    pub density_samples: usize,
    pub monotonicity_points: usize,
    pub spectrum: bool,
    pub seed: u64,
}

impl Default for DiskParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            nodes: 128,
            side: 4.0,
            eps_schedule: alloc::vec![0.2, 0.1, 0.05],
            solver: SolverConfig::default(),
            loops: 200,
            density_radius: 0.3,
            density_samples: 8,
            monotonicity_points: 4,
            spectrum: true,
            seed: 0,
        }
    }
}

/// In-plane radial field `(1 − r²)(x, y, 0)` about the vertical axis through
/// `c`, zero on the circle `r = radius`, cut off smoothly before the box
/// boundary. Its Jacobian is not skew, so `δV` of it is not zero identically.
pub fn radial_field(grid: &GridSpec, c: &Point, radius: f64, inner: f64, outer: f64) -> VectorField {
    (0..grid.len())
        .map(|x| {
            let p = grid.position(x);
            let d = [(p[0] - c[0]) / radius, (p[1] - c[1]) / radius, (p[2] - c[2]) / radius];
            let chi = plateau(radius * libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), inner, outer);
            let w = chi * (1.0 - d[0] * d[0] - d[1] * d[1]) * radius;
            [w * d[0], w * d[1], 0.0]
        })
        .collect()
}

/// Rotation about the vertical axis through `c`, cut off smoothly before the
/// box boundary.
pub fn rotation_field(grid: &GridSpec, c: &Point, inner: f64, outer: f64) -> VectorField {
    (0..grid.len())
        .map(|x| {
            let p = grid.position(x);
            let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            let chi = plateau(libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), inner, outer);
            [-chi * d[1], chi * d[0], 0.0]
        })
        .collect()
}

pub fn run_disk_3d(p: &DiskParams) -> Result<ExperimentRun> {
    let grid = GridSpec::centered(3, p.nodes, p.side)?;
    let circle = Component::circle([0.0; 3], p.radius, circle_vertices());
    let gamma = BoundaryManifold::new(3, alloc::vec![circle])?.offset_for_grid(&grid)?;
    let centre = point_of(&gamma, 0);
    let seam = build_seam(&gamma, &grid)?;
    let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
    let start = initialize(&grid, gauge, &seam, InitMode::SeamProfile, p.eps_schedule[0], BoundaryCondition::Dirichlet, p.seed)?;
    let cont = continuation(&start, &SolverConfig {
        eps_schedule: p.eps_schedule.clone(),
        ..p.solver.clone()
    })?;
    let mut rep = ExperimentReport::new("disk_3d", &start, &p.eps_schedule);
    rep.put("competitor_energy", cont.competitor_energy);
    rep.verdicts.push(Verdict::equals("competitor_bound", f64::from(u8::from(cont.bound_holds)), 1.0));
    let area = core::f64::consts::PI * p.radius * p.radius;
    rep.oracle_area = Some(area);

    let delta0 = gamma.tubular_radius(&grid)?;
    let half = 0.5 * p.side;
    let g = rotation_field(&grid, &centre, 0.65 * half, 0.9 * half);
    let gr = radial_field(&grid, &centre, p.radius, 0.65 * half, 0.9 * half);
    let (mut dv, mut dv_ratio, mut haus, mut lam, mut masses) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut dv_radial = Vec::new();
    for st in &cont.stages {
        let summary = StageSummary::from_outcome(&st.outcome);
        masses.push(summary.mass);
        rep.stages.push(summary);
        let s = &st.outcome.section;
        let v = varifold(s);
        let fv = first_variation(&v, s, &gamma, delta0, &g)?;
        dv.push(fv.value.abs());
        dv_ratio.push(fv.value.abs() / (fv.mass * fv.dg_sup));
        dv_radial.push(first_variation(&v, s, &gamma, delta0, &gr)?.value.abs());
        haus.push((st.eps, stage_hausdorff(s)?));
        if p.spectrum {
            let spec = hessian_spectrum(s, &free_mask(s), 1, p.seed)?;
            lam.push(spec.values[0]);
            rep.verdicts.push(Verdict::at_least(&alloc::format!("lambda_min_{}", st.eps), spec.values[0], -spec.tol_eig));
        }
    }
    for (i, w) in dv_radial.windows(2).enumerate() {
        rep.verdicts.push(Verdict::at_most(&alloc::format!("first_variation_decrease_{}", i + 1), w[1], w[0]));
    }
    rep.verdicts.push(Verdict::at_most("first_variation_ratio", *dv_ratio.last().expect("stages"), 0.02));
    hausdorff_trend(&mut rep, &haus);
    rep.put_series("mass", masses);
    rep.put_series("first_variation", dv);
    rep.put_series("first_variation_radial", dv_radial);
    rep.put_series("first_variation_ratio", dv_ratio);
    rep.put_series("lambda_min", lam);

    let last = cont.stages.last().expect("non-empty schedule");
    let s = &last.outcome.section;
    let mass = varifold(s).total_mass();
    rep.put("mass_ratio", mass / area);
    rep.verdicts.push(Verdict::within("mass_ratio", mass / area, 0.95, 1.05));

    let t = extract_nodal_set(s).topology;
    rep.topology = Some(t);
    rep.verdicts.push(Verdict::equals("nodal_components", t.components as f64, 1.0));
    rep.verdicts.push(Verdict::equals("nodal_boundary_loops", t.boundary as f64, 1.0));
    rep.verdicts.push(Verdict::equals("nodal_genus", t.genus.map_or(-1.0, |g| g as f64), 0.0));

    // Densities and monotonicity at points of Γ.
    let verts = gamma.components()[0].vertices();
    let (mut dens_e, mut dens_v) = (Vec::new(), Vec::new());
    for k in 0..p.density_samples {
        let q = verts[k * verts.len() / p.density_samples];
        let d = density_ratio(s, &q, p.density_radius);
        dens_e.push(d.energy);
        dens_v.push(d.varifold);
    }
    let (lo, hi) = dens_e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    rep.verdicts.push(Verdict::at_least("density_min", lo, 0.4));
    rep.verdicts.push(Verdict::at_most("density_max", hi, 0.6));
    rep.put_series("density_energy", dens_e);
    rep.put_series("density_varifold", dens_v);

    let radii = linspace(4.0 * s.eps, 0.9 * delta0, 16);
    let mut lambdas = Vec::new();
    for k in 0..p.monotonicity_points {
        let q = verts[k * verts.len() / p.monotonicity_points];
        lambdas.push(monotonicity_profile(s, &q, 0.0, &radii).fitted_lambda);
    }
    let lam_max = lambdas.iter().copied().fold(0.0, f64::max);
    rep.verdicts.push(Verdict::at_most("monotonicity_fitted_lambda", lam_max, 5.0));
    rep.put_series("monotonicity_fitted_lambda", lambdas);

    // Parity: a small loop around Γ, then random loops.
    let q = verts[0];
    let ring = GridLoop::square_around(&grid, &q, (0, 2), 0.2)?;
    let zp = zero_parity(s, &gamma, &ring)?;
    rep.verdicts.push(Verdict::equals("zero_count_small_loop", zp.crossings as f64, 1.0));
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(p.seed);
    let sweep = parity_sweep(s, &gamma, &mut rng, p.loops, 40)?;
    rep.put("parity_loops", sweep.tested as f64);
    rep.put("parity_skipped", sweep.skipped as f64);
    rep.verdicts.push(Verdict::equals("parity_consistent_fraction", sweep.consistent as f64 / sweep.tested as f64, 1.0));

    Ok(ExperimentRun {
        report: rep,
        sections: cont.stages.into_iter().map(|st| st.outcome.section).collect(),
        gamma,
        seam,
    })
}
