use std::sync::Arc;

use acpl_core::bundle::{build_seam, gauge_field_from_seam, gauge_transform};
use acpl_core::diagnostics::{hessian_apply, varifold};
use acpl_core::energy::{gradient, total_energy};
use acpl_core::geometry::{circle_vertices, linking};
use acpl_core::{BoundaryCondition, BoundaryManifold, Component, Error, GaugeField, GaugeSection, GridLoop, GridSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn puncture_section(nodes: usize, values: &[f64], eps: f64) -> (GaugeSection, BoundaryManifold) {
    let grid = GridSpec::centered(2, nodes, 2.0).unwrap();
    let gamma = BoundaryManifold::points(&[[0.1, -0.2, 0.0]]).unwrap().offset_for_grid(&grid).unwrap();
    let gauge = Arc::new(gauge_field_from_seam(&build_seam(&gamma, &grid).unwrap(), &grid));
    let u = (0..grid.len()).map(|i| values[i % values.len()]).collect();
    (GaugeSection::new(grid, gauge, u, eps, BoundaryCondition::Dirichlet).unwrap(), gamma)
}

fn disk_section(nodes: usize) -> (GaugeSection, BoundaryManifold) {
    let grid = GridSpec::centered(3, nodes, 3.0).unwrap();
    let gamma = BoundaryManifold::new(3, vec![Component::circle([0.0; 3], 0.8, circle_vertices())])
        .unwrap()
        .offset_for_grid(&grid)
        .unwrap();
    let gauge = Arc::new(gauge_field_from_seam(&build_seam(&gamma, &grid).unwrap(), &grid));
    let u = vec![0.5; grid.len()];
    (GaugeSection::new(grid, gauge, u, 0.3, BoundaryCondition::Dirichlet).unwrap(), gamma)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_and_coords_round_trip(dims in prop::collection::vec(3usize..9, 1..=3), pick in any::<u64>()) {
        let g = GridSpec::new(dims.len(), &dims, 0.25, &vec![0.0; dims.len()]).unwrap();
        let idx = (pick % g.len() as u64) as usize;
        prop_assert_eq!(g.index(g.coords(idx)), idx);
    }

    #[test]
    fn gauge_transforms_preserve_observables(
        values in prop::collection::vec(-1.2f64..1.2, 7..40),
        signs in prop::collection::vec(any::<bool>(), 1..64),
        eps in 0.1f64..0.6,
    ) {
        let (s, _) = puncture_section(15, &values, eps);
        let tau: Vec<i8> = (0..s.u.len()).map(|i| if signs[i % signs.len()] { 1 } else { -1 }).collect();
        let t = gauge_transform(&s, &tau).unwrap();
        prop_assert!(rel(total_energy(&s), total_energy(&t)) <= 1e-12);
        prop_assert!(rel(varifold(&s).total_mass(), varifold(&t).total_mass()) <= 1e-12);
        let (gs, gt) = (gradient(&s), gradient(&t));
        for i in 0..s.u.len() {
            prop_assert!((gt[i] - f64::from(tau[i]) * gs[i]).abs() <= 1e-10 * (1.0 + gs[i].abs()));
        }
        let l = GridLoop::square_around(&s.grid, &[0.1, -0.2, 0.0], (0, 1), 0.5).unwrap();
        prop_assert_eq!(s.gauge.holonomy(&s.grid, &l), t.gauge.holonomy(&t.grid, &l));
    }

    #[test]
    fn energy_is_nonnegative_and_hessian_symmetric(
        values in prop::collection::vec(-1.5f64..1.5, 5..30),
        phi in prop::collection::vec(-1.0f64..1.0, 5..30),
        psi in prop::collection::vec(-1.0f64..1.0, 5..30),
    ) {
        let (s, _) = puncture_section(11, &values, 0.3);
        prop_assert!(total_energy(&s) >= 0.0);
        let mask: Vec<bool> = (0..s.grid.len()).map(|x| !s.grid.is_boundary(x)).collect();
        let expand = |v: &[f64]| -> Vec<f64> { (0..s.grid.len()).map(|i| if mask[i] { v[i % v.len()] } else { 0.0 }).collect() };
        let (a, b) = (expand(&phi), expand(&psi));
        let (ha, hb) = (hessian_apply(&s, &mask, &a), hessian_apply(&s, &mask, &b));
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let (l, r) = (dot(&ha, &b), dot(&a, &hb));
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
    }

    #[test]
    fn holonomy_is_parity_of_linking_2d(seed in any::<u64>()) {
        let (s, gamma) = puncture_section(17, &[1.0], 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let l = GridLoop::random(&s.grid, &mut rng, 10);
            match linking(&l, &gamma, &s.grid) {
                Ok((_, parity)) => prop_assert_eq!(s.gauge.holonomy(&s.grid, &l), if parity == 1 { -1 } else { 1 }),
                Err(Error::LoopTouchesSeamEdgeCase { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn holonomy_is_parity_of_linking_3d(seed in any::<u64>()) {
        let (s, gamma) = disk_section(13);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let l = GridLoop::random(&s.grid, &mut rng, 20);
            match linking(&l, &gamma, &s.grid) {
                Ok((_, parity)) => prop_assert_eq!(s.gauge.holonomy(&s.grid, &l), if parity == 1 { -1 } else { 1 }),
                Err(Error::LoopTouchesSeamEdgeCase { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}

#[test]
fn pure_phases_have_zero_energy_only_without_a_seam() {
    let grid = GridSpec::centered(2, 9, 2.0).unwrap();
    let flat = GaugeSection::new(grid, Arc::new(GaugeField::trivial(&grid)), vec![-1.0; grid.len()], 0.2, BoundaryCondition::Natural).unwrap();
    assert_eq!(total_energy(&flat), 0.0);
    let (twisted, _) = puncture_section(9, &[1.0], 0.2);
    assert!(total_energy(&twisted) > 0.0);
}
