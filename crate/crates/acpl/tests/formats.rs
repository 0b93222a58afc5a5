use std::sync::Arc;

use acpl::checkpoint::{same_checkpoint, MAGIC};
use acpl::formats::{profile_csv, read_json, read_obj, write_json, write_obj, ObjMesh, ProfileRow};
use acpl::gamma_file::{format_gamma, parse_gamma};
use acpl::{Checkpoint, IoError};
use acpl_core::bundle::{build_seam, gauge_field_from_seam};
use acpl_core::geometry::circle_vertices;
use acpl_core::{BoundaryCondition, BoundaryManifold, Component, GaugeField, GaugeSection, GridSpec};
use proptest::prelude::*;

fn random_checkpoint(dim: usize, dims: Vec<usize>, values: Vec<f64>, flips: Vec<bool>, eps: f64, natural: bool) -> Checkpoint {
    let grid = GridSpec::new(dim, &dims, 0.1, &vec![-0.37; dim]).unwrap();
    let flags: Vec<bool> = (0..3 * grid.len()).map(|e| flips[e % flips.len()] && grid.has_edge(e / 3, e % 3)).collect();
    let gauge = Arc::new(GaugeField::from_flags(&grid, flags).unwrap());
    let u: Vec<f64> = (0..grid.len()).map(|i| values[i % values.len()]).collect();
    let bc = if natural { BoundaryCondition::Natural } else { BoundaryCondition::Dirichlet };
    let gamma = match dim {
        2 => BoundaryManifold::points(&[[0.01, 0.02, 0.0], [-0.05, 0.013, 0.0]]).unwrap(),
        3 => BoundaryManifold::new(3, vec![Component::circle([0.0; 3], 0.1, 12)]).unwrap(),
        _ => BoundaryManifold::empty(2).unwrap(),
    };
    Checkpoint {
        section: GaugeSection::new(grid, gauge, u, eps, bc).unwrap(),
        gamma,
    }
}

fn dims_for(dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(3usize..7, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn checkpoint_round_trips(
        (dim, dims) in (1usize..=3).prop_flat_map(|d| (Just(d), dims_for(d))),
        values in prop::collection::vec(-1.5f64..1.5, 1..40),
        flips in prop::collection::vec(any::<bool>(), 1..50),
        eps in 1e-3f64..1.0,
        natural in any::<bool>(),
    ) {
        let ck = random_checkpoint(dim, dims, values, flips, eps, natural);
        let bytes = ck.to_bytes();
        prop_assert_eq!(&bytes[..4], MAGIC);
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert!(same_checkpoint(&ck, &back));
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncated_checkpoints_are_rejected(cut in 0usize..200) {
        let ck = random_checkpoint(2, vec![5, 4], vec![0.5, -0.25], vec![true, false, false], 0.1, false);
        let bytes = ck.to_bytes();
        let cut = cut.min(bytes.len() - 1);
        prop_assert!(Checkpoint::from_bytes(&bytes[..cut]).is_err());
    }

    #[test]
    fn profile_csv_round_trips(rows in prop::collection::vec((1e-3f64..10.0, 0.0f64..100.0, 0.0f64..10.0), 0..20)) {
        let rows: Vec<ProfileRow> = rows.into_iter().map(|(r, e, m)| ProfileRow { r, e, m }).collect();
        let bytes = profile_csv(&rows).unwrap();
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        let back: Vec<ProfileRow> = rd.deserialize().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn gamma_points_round_trip(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5)) {
        // Keep the points well separated.
        let pts: Vec<[f64; 3]> = pts.iter().enumerate().map(|(i, &(x, y))| [x + 3.0 * i as f64, y, 0.0]).collect();
        let g = BoundaryManifold::points(&pts).unwrap();
        let back = parse_gamma(&format_gamma(&g), 2).unwrap();
        prop_assert_eq!(back.components(), g.components());
    }
}

#[test]
fn checkpoint_with_seam_gauge_round_trips_through_a_file() {
    let grid = GridSpec::centered(3, 17, 4.0).unwrap();
    let gamma = BoundaryManifold::new(3, vec![Component::circle([0.0; 3], 1.0, circle_vertices())])
        .unwrap()
        .offset_for_grid(&grid)
        .unwrap();
    let seam = build_seam(&gamma, &grid).unwrap();
    let gauge = Arc::new(gauge_field_from_seam(&seam, &grid));
    let u = (0..grid.len()).map(|i| (i as f64 * 0.37).sin()).collect();
    let ck = Checkpoint {
        section: GaugeSection::new(grid, gauge, u, 0.2, BoundaryCondition::Dirichlet).unwrap(),
        gamma,
    };
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nested/disk.acpl");
    ck.save(&p).unwrap();
    let back = Checkpoint::load(&p).unwrap();
    assert!(same_checkpoint(&ck, &back));
    assert_eq!(*back.section.gauge, gauge_field_from_seam(&build_seam(&back.gamma, &grid).unwrap(), &grid));
}

#[test]
fn checkpoint_header_layout() {
    let ck = random_checkpoint(2, vec![3, 4], vec![0.25], vec![false], 0.05, false);
    let b = ck.to_bytes();
    assert_eq!(&b[0..4], b"ACPL");
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
    assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(b[12..20].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(b[20..28].try_into().unwrap()), 4);
    assert_eq!(f64::from_le_bytes(b[28..36].try_into().unwrap()), 0.1);
    assert_eq!(f64::from_le_bytes(b[36..44].try_into().unwrap()), 0.05);
    assert_eq!(f64::from_le_bytes(b[44..52].try_into().unwrap()), 0.25);

    let mut bad = b.clone();
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(IoError::Checkpoint(_))));
    let mut extra = b.clone();
    extra.push(0);
    assert!(Checkpoint::from_bytes(&extra).is_err());
    let mut version = b;
    version[4] = 9;
    assert!(Checkpoint::from_bytes(&version).is_err());
}

#[test]
fn edge_bits_are_axis_major() {
    // 3 × 3 grid: 6 x-edges then 6 y-edges. Flip the first y-edge only.
    let grid = GridSpec::new(2, &[3, 3], 1.0, &[0.0, 0.0]).unwrap();
    let mut flags = vec![false; 3 * grid.len()];
    flags[GridSpec::edge_index(0, 1)] = true;
    let gauge = Arc::new(GaugeField::from_flags(&grid, flags).unwrap());
    let ck = Checkpoint {
        section: GaugeSection::new(grid, gauge, vec![0.0; 9], 0.5, BoundaryCondition::Natural).unwrap(),
        gamma: BoundaryManifold::empty(2).unwrap(),
    };
    let b = ck.to_bytes();
    let bits_at = 4 + 4 + 4 + 16 + 16 + 9 * 8;
    assert_eq!(b[bits_at], 1 << 6);
    assert_eq!(b[bits_at + 1], 0);
}

#[test]
fn obj_and_json_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = ObjMesh {
        vertices: vec![[0.5, -1.25, 3.0e-9], [0.1, 0.2, 0.3], [1.0 / 7.0, 0.0, 2.0]],
        lines: vec![],
        faces: vec![[0, 1, 2], [2, 1, 0]],
    };
    let p = dir.path().join("m.obj");
    write_obj(&p, &mesh).unwrap();
    assert_eq!(read_obj(&p).unwrap(), mesh);

    let report = acpl_core::energy::energy(
        &GaugeSection::new(
            GridSpec::centered(1, 9, 1.0).unwrap(),
            Arc::new(GaugeField::trivial(&GridSpec::centered(1, 9, 1.0).unwrap())),
            (0..9).map(|i| (i as f64 - 4.0) / 4.0).collect(),
            0.3,
            BoundaryCondition::Dirichlet,
        )
        .unwrap(),
        None,
    );
    let j = dir.path().join("e.json");
    write_json(&j, "energy", &report).unwrap();
    let back: acpl_core::EnergyReport = read_json(&j, "energy").unwrap();
    assert_eq!(back, report);
}
