use coarselab::coarse::{coarse_path, critical_height_down, critical_height_up, hyperbolic_distance, rho_tilde};
use coarselab::similarity::{fit_lambda, ls_slope};
use coarselab::{FrameMetric, GroupPoint, Model};
use proptest::prelude::*;

fn signed_magnitude() -> impl Strategy<Value = f64> {
    (-3.0..5.0f64, any::<bool>()).prop_map(|(e, s)| if s { 10f64.powf(e) } else { -(10f64.powf(e)) })
}

fn sol_point() -> impl Strategy<Value = GroupPoint> {
    (signed_magnitude(), signed_magnitude(), -8.0..8.0f64).prop_map(|(x, y, t)| GroupPoint { n1: vec![x], n2: vec![y], height: t })
}

fn h2_point() -> impl Strategy<Value = (f64, f64)> {
    (-30.0..30.0f64, -5.0..5.0f64)
}

/// Upper half-plane distance with `u = e^t`.
fn arcosh(p: (f64, f64), q: (f64, f64)) -> f64 {
    let (u, v) = (p.1.exp(), q.1.exp());
    (1.0 + ((p.0 - q.0).powi(2) + (u - v).powi(2)) / (2.0 * u * v)).acosh()
}

proptest! {
    #[test]
    fn hyperbolic_matches_arcosh(p in h2_point(), q in h2_point()) {
        let d = arcosh(p, q);
        prop_assert!((hyperbolic_distance(1.0, p, q) - d).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn hyperbolic_triangle(p in h2_point(), q in h2_point(), r in h2_point(), a in 0.5..3.0f64) {
        let d = |x, y| hyperbolic_distance(a, x, y);
        prop_assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-9);
    }

    #[test]
    fn hyperbolic_height_is_lipschitz(p in h2_point(), q in h2_point(), a in 0.5..3.0f64) {
        prop_assert!(hyperbolic_distance(a, p, q) >= (p.1 - q.1).abs() - 1e-12);
    }

    #[test]
    fn rho_tilde_is_symmetric(p in sol_point(), q in sol_point()) {
        let m = Model::sol();
        prop_assert_eq!(rho_tilde(&m, &p, &q), rho_tilde(&m, &q, &p));
    }

    #[test]
    fn coarse_path_tracks_rho_tilde(p in sol_point(), q in sol_point()) {
        let m = Model::sol();
        let path = coarse_path(&m, &FrameMetric::identity(3), &p, &q).unwrap();
        prop_assert!((path.length - rho_tilde(&m, &p, &q)).abs() <= 2.0);
        prop_assert_eq!(path.waypoints.first(), Some(&p));
        prop_assert_eq!(path.waypoints.last(), Some(&q));
        prop_assert!(path.length >= (p.height - q.height).abs() - 1e-9);
    }

    #[test]
    fn critical_heights_are_roots(x in prop::collection::vec(1e-4..1e6f64, 2), r in 1.0..3.0f64) {
        let rates = [1.0, r];
        let zero = [0.0, 0.0];
        let t = critical_height_up(&rates, &x, &zero).unwrap();
        let up = ((-2.0 * t).exp() * x[0] * x[0] + (-2.0 * r * t).exp() * x[1] * x[1]).sqrt();
        prop_assert!((up - 1.0).abs() <= 1e-10);
        let s = critical_height_down(&rates, &x, &zero).unwrap();
        let down = ((2.0 * s).exp() * x[0] * x[0] + (2.0 * r * s).exp() * x[1] * x[1]).sqrt();
        prop_assert!((down - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn fit_lambda_scales(pairs in prop::collection::vec((0.1..100.0f64, 0.1..100.0f64), 12..80), k in -3i32..4) {
        let s = 2f64.powi(k);
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (s * a, b)).collect();
        prop_assert_eq!(fit_lambda(&scaled, 10).unwrap(), s * fit_lambda(&pairs, 10).unwrap());
    }

    #[test]
    fn ls_slope_recovers_lines(xs in prop::collection::btree_set(-1000i32..1000, 2..40), a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x as f64, a * x as f64 + b)).collect();
        prop_assert!((ls_slope(&pts) - a).abs() <= 1e-9 * (1.0 + a.abs()));
    }
}
