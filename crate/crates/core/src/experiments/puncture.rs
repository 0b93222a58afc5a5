use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bundle::{build_seam, gauge_field_from_seam, lift_to_double_cover_2d, GaugeField, GaugeSection, SeamSurface};
use crate::diagnostics::{
    boundary_scaling_fit, discrepancy, discrepancy_blowup, extract_nodal_set, hessian_spectrum,
    interior_bound_checks, monotonicity_profile, zero_parity,
};
use crate::error::Result;
use crate::geometry::{BoundaryManifold, GridLoop};
use crate::grid::{dist, BoundaryCondition, GridSpec};
use crate::solver::{continuation, initialize, minimize, minimize_weighted, InitMode, SolverConfig};

use super::{free_mask, hausdorff_trend, stage_hausdorff, linspace, parity_sweep, point_of, ExperimentReport, ExperimentRun, StageSummary, Verdict};

/// Γ = one point near the centre of a square box.
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureParams {
    pub eps_schedule: Vec<f64>,
    pub nodes: usize,
    pub side: f64,
    /// Second, finer grid solved at the last ε only.
    pub refined_nodes: Option<usize>,
    pub solver: SolverConfig,
    /// Interior region `{ρ > δ}` for the discrepancy checks across the
    /// schedule (needs `δ ≥ 4ε` for every ε).
    pub delta: f64,
    /// Region `{ρ > far_radius}` for the refinement comparison.
    pub far_radius: f64,
    /// Width of the box layer left out of interior checks.
    pub box_layer: f64,
    pub loops: usize,
    /// Half side of the `z`-square for the double-cover solve.
    pub lift_half: f64,
    pub spectrum: bool,
    pub seed: u64,
}

impl Default for PunctureParams {
    fn default() -> Self {
        Self {
            eps_schedule: alloc::vec![0.2, 0.1, 0.05],
            nodes: 513,
            side: 3.2,
            refined_nodes: Some(1025),
            solver: SolverConfig::default(),
            delta: 0.8,
            far_radius: 0.4,
            box_layer: 0.2,
            loops: 200,
            lift_half: 0.6,
            spectrum: true,
            seed: 0,
        }
    }
}

struct Sups {
    near: f64,
    far: f64,
}

fn sup_xi(s: &GaugeSection, gamma: &BoundaryManifold, delta: f64, layer: f64) -> Sups {
    let xi = discrepancy(s).xi;
    let (mut near, mut far) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, &v) in xi.iter().enumerate() {
        let p = s.grid.position(x);
        let rho = gamma.distance(&p);
        if rho < 0.1 {
            near = near.max(v);
        } else if rho > delta && s.grid.distance_to_box(&p) >= layer {
            far = far.max(v);
        }
    }
    Sups { near, far }
}

pub fn run_puncture_2d(p: &PunctureParams) -> Result<ExperimentRun> {
    let grid = GridSpec::centered(2, p.nodes, p.side)?;
    let gamma = BoundaryManifold::points(&[[0.0; 3]])?.offset_for_grid(&grid)?;
    let centre = point_of(&gamma, 0);
    let seam = build_seam(&gamma, &grid)?;
    let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
    let eps0 = p.eps_schedule[0];
    let start = initialize(&grid, gauge.clone(), &seam, InitMode::SeamProfile, eps0, BoundaryCondition::Dirichlet, p.seed)?;
    let cont = continuation(&start, &SolverConfig {
        eps_schedule: p.eps_schedule.clone(),
        ..p.solver.clone()
    })?;
    let mut rep = ExperimentReport::new("puncture_2d", &start, &p.eps_schedule);
    rep.put("competitor_energy", cont.competitor_energy);
    rep.verdicts.push(Verdict::equals("competitor_bound", f64::from(u8::from(cont.bound_holds)), 1.0));

    let (mut sup_far, mut l1_far, mut haus, mut lam) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for st in &cont.stages {
        rep.stages.push(StageSummary::from_outcome(&st.outcome));
        let s = &st.outcome.section;
        let ib = interior_bound_checks(s, &gamma, p.delta, p.box_layer)?;
        sup_far.push(ib.sup_xi_pos);
        l1_far.push(ib.l1_abs_xi);
        rep.verdicts.push(Verdict::at_most(&alloc::format!("sup_abs_u_far_{}", st.eps), ib.sup_abs_u, 1.0));
        haus.push((st.eps, stage_hausdorff(s)?));
        if p.spectrum {
            let spec = hessian_spectrum(s, &free_mask(s), 1, p.seed)?;
            lam.push(spec.values[0]);
            rep.verdicts.push(Verdict::at_least(&alloc::format!("lambda_min_{}", st.eps), spec.values[0], -spec.tol_eig));
        }
    }
    for (i, w) in sup_far.windows(2).enumerate() {
        rep.verdicts.push(Verdict::at_most(&alloc::format!("sup_xi_far_decrease_{}", i + 1), w[1], w[0]));
    }
    rep.put_series("sup_xi_pos_far", sup_far);
    rep.put_series("l1_abs_xi_far", l1_far);
    hausdorff_trend(&mut rep, &haus);
    rep.put_series("lambda_min", lam);

    let s = &cont.stages.last().expect("non-empty schedule").outcome.section;
    let (h, eps) = (s.grid.h, s.eps);

    // Nodal set: one ray from the pierced plaquette to the box.
    let mesh = extract_nodal_set(s);
    let t = mesh.topology;
    rep.topology = Some(t);
    let mut degree = alloc::vec![0usize; mesh.vertices.len()];
    for seg in &mesh.segments {
        degree[seg[0]] += 1;
        degree[seg[1]] += 1;
    }
    let ends: Vec<_> = (0..mesh.vertices.len()).filter(|&v| degree[v] == 1).map(|v| mesh.vertices[v]).collect();
    let at_gamma = ends.iter().filter(|q| dist(q, &centre) <= h).count();
    let at_box = ends.iter().filter(|q| s.grid.distance_to_box(q) <= h).count();
    rep.verdicts.push(Verdict::equals("nodal_components", t.components as f64, 1.0));
    rep.verdicts.push(Verdict::equals("nodal_singular_points", t.singular as f64, 0.0));
    rep.verdicts.push(Verdict::equals("nodal_end_at_gamma", at_gamma as f64, 1.0));
    rep.verdicts.push(Verdict::equals("nodal_end_at_box", at_box as f64, 1.0));

    // Parity.
    let ring = GridLoop::square_around(&s.grid, &centre, (0, 1), 0.5)?;
    let zp = zero_parity(s, &gamma, &ring)?;
    rep.verdicts.push(Verdict::equals("zero_count_radius_half", zp.crossings as f64, 1.0));
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(p.seed);
    let sweep = parity_sweep(s, &gamma, &mut rng, p.loops, 40)?;
    rep.put("parity_loops", sweep.tested as f64);
    rep.put("parity_skipped", sweep.skipped as f64);
    rep.verdicts.push(Verdict::equals("parity_consistent_fraction", sweep.consistent as f64 / sweep.tested as f64, 1.0));

    // Boundary scalings.
    let fit = boundary_scaling_fit(s, &gamma, 0)?;
    rep.put("a_u", fit.u_exponent);
    rep.put("a_g", fit.grad_exponent);
    rep.verdicts.push(Verdict::within("a_u", fit.u_exponent, 0.35, 0.65));
    rep.verdicts.push(Verdict::within("a_g", fit.grad_exponent, -0.65, -0.35));

    // Discrepancy blow-up.
    let blow = discrepancy_blowup(s, &gamma, 0)?;
    rep.put("sup_xi_rho", blow.sup_xi_rho);
    if let Some(e) = blow.exponent {
        rep.put("xi_rho_exponent", e);
    }
    let base = sup_xi(s, &gamma, p.far_radius, p.box_layer);
    rep.put("sup_xi_near", base.near);
    rep.put("sup_xi_far", base.far);

    // Monotonicity with Λ̂ = 0 on [4ε, r_max].
    let r_max = 0.9 * gamma.tubular_radius(&s.grid)?.min(s.grid.distance_to_box(&centre));
    let radii = linspace(4.0 * eps, r_max, 16);
    let prof = monotonicity_profile(s, &centre, 0.0, &radii);
    let worst = prof.values.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    rep.put("monotonicity_fitted_lambda", prof.fitted_lambda);
    rep.put_series("monotonicity_r", prof.radii.clone());
    rep.put_series("monotonicity_m", prof.values.clone());
    rep.verdicts.push(Verdict::at_least("monotonicity_min_step_ratio", worst, 0.98));

    // Double cover: solve ε²Δv = 4|z|²(v² − 1)v on a z-square, starting and
    // held at the boundary by the lift of u. The lifted solution is smooth at
    // z = 0, so it is v that gets interpolated: |u(x)| at x-nodes against
    // |v(√(x − p))|.
    let nz = 2 * libm::ceil(p.lift_half / h) as usize;
    let zgrid = GridSpec::centered(2, nz, (nz - 1) as f64 * h)?;
    let lifted = lift_to_double_cover_2d(s, &gamma, &seam, 0, &zgrid)?;
    let weight: Vec<f64> = (0..zgrid.len())
        .map(|i| {
            let z = zgrid.position(i);
            4.0 * (z[0] * z[0] + z[1] * z[1])
        })
        .collect();
    let free: Vec<bool> = (0..zgrid.len()).map(|i| !zgrid.is_boundary(i)).collect();
    let (v, _, _) = minimize_weighted(&zgrid, lifted, &free, &weight, eps, &p.solver)?;
    let vs = GaugeSection::new(zgrid, Arc::new(GaugeField::trivial(&zgrid)), v, eps, BoundaryCondition::Dirichlet)?;
    let flat = SeamSurface::empty();
    let reach = 0.95 * p.lift_half;
    let mut lift_diff = 0.0f64;
    for x in 0..s.grid.len() {
        let q = s.grid.position(x);
        let (dx, dy) = (q[0] - centre[0], q[1] - centre[1]);
        let rho = libm::hypot(dx, dy);
        if rho >= reach * reach {
            continue;
        }
        let (r, half) = (libm::sqrt(rho), 0.5 * libm::atan2(dy, dx));
        let z = [r * libm::cos(half), r * libm::sin(half), 0.0];
        lift_diff = lift_diff.max((s.u[x].abs() - vs.interpolate(&flat, &z).abs()).abs());
    }
    rep.put("double_cover_max_diff", lift_diff);
    rep.verdicts.push(Verdict::at_most("double_cover_max_diff", lift_diff, 5.0 * h));

    let mut sections: Vec<GaugeSection> = cont.stages.iter().map(|st| st.outcome.section.clone()).collect();

    // One grid refinement at the last ε.
    if let Some(fine_nodes) = p.refined_nodes {
        let fgrid = GridSpec::centered(2, fine_nodes, p.side)?;
        let fgamma = BoundaryManifold::points(&[[0.0; 3]])?.offset_for_grid(&fgrid)?;
        let fseam = build_seam(&fgamma, &fgrid)?;
        let fgauge = Arc::new(gauge_field_from_seam(&fseam, &fgrid));
        let fstart = initialize(&fgrid, fgauge, &fseam, InitMode::SeamProfile, eps, BoundaryCondition::Dirichlet, p.seed)?;
        let fine = minimize(&fstart, &p.solver)?;
        rep.stages.push(StageSummary::from_outcome(&fine));
        let fs = &fine.section;
        let fblow = discrepancy_blowup(fs, &fgamma, 0)?;
        let fsup = sup_xi(fs, &fgamma, p.far_radius, p.box_layer);
        rep.put("refined_sup_xi_rho", fblow.sup_xi_rho);
        rep.put("refined_sup_xi_near", fsup.near);
        rep.put("refined_sup_xi_far", fsup.far);
        rep.verdicts.push(Verdict::at_least("sup_xi_rho_positive", blow.sup_xi_rho.min(fblow.sup_xi_rho), f64::MIN_POSITIVE));
        rep.verdicts.push(Verdict::at_most(
            "sup_xi_rho_refinement_change",
            (fblow.sup_xi_rho / blow.sup_xi_rho - 1.0).abs(),
            0.5,
        ));
        rep.verdicts.push(Verdict::at_most("sup_xi_far_refined", fsup.far, base.far));
        rep.verdicts.push(Verdict::at_least("sup_xi_near_refined", fsup.near, base.near));
        sections.push(fine.section);
    }

    Ok(ExperimentRun {
        report: rep,
        sections,
        gamma,
        seam,
    })
}
