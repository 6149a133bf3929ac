use coarselab::coarse::hyperbolic_distance;
use coarselab::numeric::{lattice_distance, polyline_length, GridSpec};
use coarselab::{FrameMetric, GroupPoint, Model};
use proptest::prelude::*;

fn h2(x: f64, t: f64) -> GroupPoint {
    GroupPoint { n1: vec![x], n2: vec![], height: t }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn h2_lattice_is_close_and_symmetric(x in -6.0..6.0f64, t in -1.5..1.5f64, s in -1.5..1.5f64) {
        let m = Model::hyperbolic_plane();
        let id = FrameMetric::identity(2);
        let grid = GridSpec::corridor(0.05);
        let (p, q) = (h2(0.0, t), h2(x, s));
        let exact = hyperbolic_distance(1.0, (0.0, t), (x, s));
        let d = lattice_distance(&m, &id, &p, &q, &grid).unwrap();
        let back = lattice_distance(&m, &id, &q, &p, &grid).unwrap();
        prop_assert_eq!(d.value, back.value);
        prop_assert!(d.value >= exact * (1.0 - 1e-6));
        prop_assert!(d.value <= exact * 1.05 + 0.05);
    }

    #[test]
    fn h2_lattice_is_left_invariant(x in -4.0..4.0f64, t in -1.0..1.0f64, gx in -5.0..5.0f64, gt in -1.0..1.0f64) {
        let m = Model::hyperbolic_plane();
        let id = FrameMetric::identity(2);
        let grid = GridSpec::corridor(0.05);
        let g = h2(gx, gt);
        let (p, q) = (h2(0.0, 0.0), h2(x, t));
        let d = lattice_distance(&m, &id, &p, &q, &grid).unwrap().value;
        let moved = lattice_distance(&m, &id, &m.multiply(&g, &p).unwrap(), &m.multiply(&g, &q).unwrap(), &grid).unwrap().value;
        prop_assert!((d - moved).abs() <= 1e-6 * (1.0 + d));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn sol_lattice_dominates_projections(x in -20.0..20.0f64, y in -20.0..20.0f64, t in -2.0..2.0f64) {
        let m = Model::sol();
        let id = FrameMetric::identity(3);
        let p = GroupPoint { n1: vec![0.0], n2: vec![0.0], height: 0.0 };
        let q = GroupPoint { n1: vec![x], n2: vec![y], height: t };
        let mut grid = GridSpec::default_for(&m);
        grid.max_nodes = 8_000_000;
        let d = lattice_distance(&m, &id, &p, &q, &grid).unwrap();
        // projections onto the two hyperbolic planes are 1-Lipschitz
        let up = hyperbolic_distance(1.0, (0.0, 0.0), (x, t));
        let down = hyperbolic_distance(1.0, (0.0, 0.0), (y, -t));
        prop_assert!(d.value >= up.max(down) * (1.0 - 1e-6), "{} < {} / {}", d.value, up, down);
        let path = d.path.unwrap();
        prop_assert!((polyline_length(&m, &id, &path) - d.value).abs() <= 0.05 * d.value + 1e-9);
    }
}
