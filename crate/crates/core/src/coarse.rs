//! Closed-form coarse geometry: hyperbolic distances, critical heights, the
//! coarse distances `ρ̃₁`, `ρ̃₂`, `ρ̃`, `ρ`, the three-coset path and coset
//! shadowing.
//!
//! Points of a factor `S_j = N_j ⋊ R` are passed as `(nilradical, height)`.
//! Rates are derivation eigenvalues: `a` for the expanding factor and `λ b`
//! for the contracting one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FrameMetric, GroupPoint, Model, ModelError};

const BISECTION_TOL: f64 = 1e-13;
const BISECTION_MAX_ITERS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoarseError {
    #[error("degenerate pair: nilradical coordinates coincide")]
    Degenerate,
    #[error("coarse path needs a diagonal frame metric")]
    NonDiagonalMetric,
    #[error("closed-form ρ needs one-dimensional factors and a diagonal metric")]
    NoClosedForm,
    #[error("ρ needs a Sol-type model")]
    NotSolType,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Distance in the 2D Heintze group `R ⋊_a R` with the frame metric `I`:
/// `(1/a)·arcosh(1 + (a²Δx² + (e^{at} − e^{as})²) / (2 e^{at} e^{as}))`.
///
/// Evaluated as `(2/a)·asinh(½·√(a²Δx² e^{−a(t+s)} + 4 sinh²(a(t−s)/2)))`,
/// which is the same quantity without cancellation.
pub fn hyperbolic_distance(a: f64, p: (f64, f64), q: (f64, f64)) -> f64 {
    let (x, t) = p;
    let (y, s) = q;
    let horizontal = a * (x - y).abs() * (-0.5 * a * (t + s)).exp();
    let vertical = 2.0 * (0.5 * a * (t - s)).sinh();
    (2.0 / a) * (0.5 * horizontal.hypot(vertical)).asinh()
}

/// Horocyclic distance `√(Σ e^{−2 r_i t} Δ_i²)` at height `t`.
pub fn horocyclic_distance(rates: &[f64], x: &[f64], y: &[f64], height: f64) -> f64 {
    rates
        .iter()
        .zip(x.iter().zip(y))
        .map(|(r, (a, b))| (a - b) * (-r * height).exp())
        .fold(0.0, f64::hypot)
}

/// Height `t` at which `√(Σ e^{−2 a_i t} Δx_i²) = 1`.
///
/// The horocyclic distance is decreasing in `t`. Bisection runs on
/// `log Σ e^{2 ln|Δx_i| − 2 a_i t}` over the bracket
/// `[max_i ln|Δx_i|/a_i, max_i (ln|Δx_i| + ½ ln k)/a_i]`, which always
/// contains the root.
pub fn critical_height_up(rates: &[f64], x: &[f64], y: &[f64]) -> Result<f64, CoarseError> {
    let logs: Vec<(f64, f64)> = rates
        .iter()
        .zip(x.iter().zip(y))
        .filter_map(|(&r, (a, b))| {
            let d = (a - b).abs();
            (d > 0.0).then(|| (r, d.ln()))
        })
        .collect();
    if logs.is_empty() {
        return Err(CoarseError::Degenerate);
    }
    let half_log_k = 0.5 * (logs.len() as f64).ln();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(r, l) in &logs {
        lo = lo.max(l / r);
        hi = hi.max((l + half_log_k) / r);
    }
    // log of the squared horocyclic distance, via log-sum-exp
    let log_f = |t: f64| {
        let m = logs
            .iter()
            .map(|&(r, l)| 2.0 * (l - r * t))
            .fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|&(r, l)| (2.0 * (l - r * t) - m).exp()).sum::<f64>().ln()
    };
    for _ in 0..BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_TOL * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if log_f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Height `t` at which `√(Σ e^{2 r_j t} Δy_j²) = 1` with `r_j = λ b_j`.
pub fn critical_height_down(rates: &[f64], x: &[f64], y: &[f64]) -> Result<f64, CoarseError> {
    critical_height_up(rates, x, y).map(|t| -t)
}

/// `t_{x,y}` for the expanding factor, `−∞` for coincident coordinates.
pub fn critical_up_or_sentinel(rates: &[f64], x: &[f64], y: &[f64]) -> f64 {
    critical_height_up(rates, x, y).unwrap_or(f64::NEG_INFINITY)
}

/// `t_{x,y}` for the contracting factor, `+∞` for coincident coordinates.
pub fn critical_down_or_sentinel(rates: &[f64], x: &[f64], y: &[f64]) -> f64 {
    critical_height_down(rates, x, y).unwrap_or(f64::INFINITY)
}

/// `ρ̃₁` on the expanding factor.
pub fn rho_tilde_1(rates: &[f64], p: (&[f64], f64), q: (&[f64], f64)) -> f64 {
    let (x, t) = p;
    let (y, s) = q;
    let tc = critical_up_or_sentinel(rates, x, y);
    if tc <= t.max(s) {
        (t - s).abs() + 1.0
    } else {
        (tc - t) + (tc - s) + 1.0
    }
}

/// `ρ̃₂` on the contracting factor.
pub fn rho_tilde_2(rates: &[f64], p: (&[f64], f64), q: (&[f64], f64)) -> f64 {
    let (x, t) = p;
    let (y, s) = q;
    let tc = critical_down_or_sentinel(rates, x, y);
    if tc >= t.min(s) {
        (t - s).abs() + 1.0
    } else {
        (t - tc) + (s - tc) + 1.0
    }
}

/// Coarse distance `ρ̃`, by the four-case formula on the two critical heights.
/// For a Heintze model this is `ρ̃₁`.
pub fn rho_tilde(model: &Model, p: &GroupPoint, q: &GroupPoint) -> f64 {
    let (t, s) = (p.height, q.height);
    let up = model.up_eigenvalues();
    if let Model::Heintze(_) = model {
        return rho_tilde_1(up, (&p.n1, t), (&q.n1, s));
    }
    let t1 = critical_up_or_sentinel(up, &p.n1, &q.n1);
    let t2 = critical_down_or_sentinel(&model.down_rates(), &p.n2, &q.n2);
    let low_ok = t2 >= t.min(s);
    let high_ok = t1 <= t.max(s);
    match (low_ok, high_ok) {
        (true, true) => (t - s).abs() + 2.0,
        (true, false) => 2.0 * t1 - (s + t) + 2.0,
        (false, true) => (s + t) - 2.0 * t2 + 2.0,
        (false, false) => 2.0 * t1 - 2.0 * t2 - (s - t).abs() + 2.0,
    }
}

/// `ρ = d⁽¹⁾ + d⁽²⁾ − |Δh|` with caller-supplied factor distances.
///
/// `d1` receives `((n1, t), (n1', s))`; `d2` receives the contracting factor
/// coordinates unchanged.
pub fn rho_with<E, F1, F2>(p: &GroupPoint, q: &GroupPoint, height_scale: f64, mut d1: F1, mut d2: F2) -> Result<f64, E>
where
    F1: FnMut((&[f64], f64), (&[f64], f64)) -> Result<f64, E>,
    F2: FnMut((&[f64], f64), (&[f64], f64)) -> Result<f64, E>,
{
    let a = d1((&p.n1, p.height), (&q.n1, q.height))?;
    let b = d2((&p.n2, p.height), (&q.n2, q.height))?;
    Ok(a + b - height_scale * (p.height - q.height).abs())
}

/// Closed-form `ρ` for a Sol-type model with one-dimensional factors and a
/// diagonal frame metric `diag(q_x, q_y, q_t)`.
///
/// Each factor metric `q_x e^{−2at}dx² + q_t dt²` is the hyperbolic plane with
/// rate `a/√q_t` in the coordinates `(√q_x x, √q_t t)`. The contracting factor
/// is evaluated with the height reversed.
pub fn rho_closed_form(model: &Model, metric: &FrameMetric, p: &GroupPoint, q: &GroupPoint) -> Result<f64, CoarseError> {
    let Model::SolType(sol) = model else {
        return Err(CoarseError::NotSolType);
    };
    model.check_point(p)?;
    model.check_point(q)?;
    if sol.up().dim() != 1 || sol.down().dim() != 1 || !metric.is_diagonal() || metric.dim() != 3 {
        return Err(CoarseError::NoClosedForm);
    }
    let a = sol.up().eigenvalues()[0];
    let b = sol.down_rates()[0];
    let (sx, sy, st) = (metric.entry(0, 0).sqrt(), metric.entry(1, 1).sqrt(), metric.entry(2, 2).sqrt());
    rho_with::<CoarseError, _, _>(
        p,
        q,
        st,
        |(x, t), (y, s)| Ok(hyperbolic_distance(a / st, (sx * x[0], st * t), (sx * y[0], st * s))),
        |(x, t), (y, s)| Ok(hyperbolic_distance(b / st, (sy * x[0], -st * t), (sy * y[0], -st * s))),
    )
}

/// Piecewise path through three vertical cosets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsePath {
    pub waypoints: Vec<GroupPoint>,
    pub length: f64,
}

/// Path `p → x₁ → z₁ → z₂ → y₂ → q` for a diagonal frame metric.
///
/// With `t ≤ s` the path descends from `p` to `low = min(t_{x₂,y₂}, t)`, crosses
/// the contracting coordinates, climbs to `high = max(t_{x₁,y₁}, s)`, crosses
/// the expanding coordinates and descends to `q`. Every crossing has length at
/// most one. Critical heights are taken for the normalized metric.
pub fn coarse_path(model: &Model, metric: &FrameMetric, p: &GroupPoint, q: &GroupPoint) -> Result<CoarsePath, CoarseError> {
    model.check_point(p)?;
    model.check_point(q)?;
    if !metric.is_diagonal() {
        return Err(CoarseError::NonDiagonalMetric);
    }
    let metric = model.normalize_metric(metric)?;
    if p.height > q.height {
        let mut path = coarse_path(model, &metric, q, p)?;
        path.waypoints.reverse();
        return Ok(path);
    }
    let k1 = model.up_dim();
    let weights: Vec<f64> = (0..model.nil_dim()).map(|i| metric.entry(i, i).sqrt()).collect();
    let scaled = |v: &[f64], w: &[f64]| -> Vec<f64> { v.iter().zip(w).map(|(a, b)| a * b).collect() };
    let up = model.up_eigenvalues();
    let down = model.down_rates();
    let (w1, w2) = weights.split_at(k1);
    let t1 = critical_up_or_sentinel(up, &scaled(&p.n1, w1), &scaled(&q.n1, w1));
    let t2 = critical_down_or_sentinel(&down, &scaled(&p.n2, w2), &scaled(&q.n2, w2));
    let (t, s) = (p.height, q.height);
    let low = t2.min(t);
    let high = t1.max(s);

    let at = |n1: &[f64], n2: &[f64], h: f64| GroupPoint { n1: n1.to_vec(), n2: n2.to_vec(), height: h };
    let waypoints = vec![
        p.clone(),
        at(&p.n1, &p.n2, low),
        at(&p.n1, &q.n2, low),
        at(&p.n1, &q.n2, high),
        at(&q.n1, &q.n2, high),
        q.clone(),
    ];
    let hop2 = horocyclic_distance(&down.iter().map(|r| -r).collect::<Vec<_>>(), &scaled(&p.n2, w2), &scaled(&q.n2, w2), low);
    let hop1 = horocyclic_distance(up, &scaled(&p.n1, w1), &scaled(&q.n1, w1), high);
    let length = (t - low) + hop2 + (high - low) + hop1 + (high - s);
    Ok(CoarsePath { waypoints, length })
}

/// Base point at height zero of the coset `q·c₂` with the same nilradical
/// limit points as `base·c₁`, where `c_j` is the perpendicular section of `Q_j`.
///
/// The coset `base·c` with `c` generated by `(u, 1)` limits onto
/// `n_base − e^{t_base δ} u/δ`, componentwise. The label is constant along the
/// coset.
pub fn shadow_coset(model: &Model, q1: &FrameMetric, q2: &FrameMetric, base: &GroupPoint) -> Result<GroupPoint, CoarseError> {
    model.check_point(base)?;
    let delta = model.derivation();
    let v1 = model.perpendicular_section(q1)?;
    let v2 = model.perpendicular_section(q2)?;
    let nil: Vec<f64> = base
        .nil_iter()
        .zip(&delta)
        .enumerate()
        .map(|(i, (n, d))| {
            let label = n - (d * base.height).exp() * v1[i] / d;
            label + v2[i] / d
        })
        .collect();
    Ok(model.nil_point(&nil, 0.0))
}

/// Nilradical limit point of the coset `base·c`, `c` generated by `(u, 1)`.
pub fn coset_label(model: &Model, v: &[f64], base: &GroupPoint) -> Vec<f64> {
    base.nil_iter()
        .zip(model.derivation())
        .zip(v)
        .map(|((n, d), u)| n - (d * base.height).exp() * u / d)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SolTypeModel;
    use std::f64::consts::E;

    fn sol_point(x: f64, y: f64, t: f64) -> GroupPoint {
        GroupPoint { n1: vec![x], n2: vec![y], height: t }
    }

    /// Upper half-plane oracle: map to `(a x, e^{at})` and use the textbook
    /// `arcosh` formula directly.
    fn half_plane_oracle(a: f64, p: (f64, f64), q: (f64, f64)) -> f64 {
        let (u1, v1) = (a * p.0, (a * p.1).exp());
        let (u2, v2) = (a * q.0, (a * q.1).exp());
        let arg = 1.0 + ((u1 - u2).powi(2) + (v1 - v2).powi(2)) / (2.0 * v1 * v2);
        arg.acosh() / a
    }

    #[test]
    fn hyperbolic_examples() {
        assert_eq!(hyperbolic_distance(1.0, (0.3, 0.2), (0.3, 0.2)), 0.0);
        assert!((hyperbolic_distance(1.0, (0.0, 0.0), (0.0, 3.0)) - 3.0).abs() < 1e-14);
        assert!((hyperbolic_distance(1.0, (0.0, 0.0), (1.0, 0.0)) - 1.5f64.acosh()).abs() < 1e-14);
        for &(a, p, q) in &[(1.0, (0.5, -1.0), (3.0, 2.0)), (2.5, (-1.0, 0.3), (0.2, -0.4))] {
            assert!((hyperbolic_distance(a, p, q) - half_plane_oracle(a, p, q)).abs() < 1e-10);
        }
    }

    #[test]
    fn critical_height_examples() {
        assert!((critical_height_up(&[1.0], &[0.0], &[E]).unwrap() - 1.0).abs() < 1e-12);
        assert!(critical_height_up(&[1.0], &[0.0], &[1.0]).unwrap().abs() < 1e-12);
        let t = critical_height_up(&[1.0, 2.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        // independent root: e^{-2t} = (√5 − 1)/2
        let oracle = -0.5 * ((5f64.sqrt() - 1.0) / 2.0).ln();
        assert!((t - oracle).abs() < 1e-12);
        assert!((t - 0.2406).abs() < 1e-4);
        assert!((horocyclic_distance(&[1.0, 2.0], &[0.0, 0.0], &[1.0, 1.0], t) - 1.0).abs() < 1e-10);
        assert_eq!(critical_height_up(&[1.0], &[2.0], &[2.0]), Err(CoarseError::Degenerate));

        assert!((critical_height_down(&[1.0], &[0.0], &[E * E]).unwrap() + 2.0).abs() < 1e-12);
        assert!(critical_height_down(&[1.0], &[0.0], &[1.0]).unwrap().abs() < 1e-12);
        assert!((critical_height_down(&[2.0], &[0.0], &[E * E]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_tilde_factor_examples() {
        assert_eq!(rho_tilde_1(&[1.0], (&[0.0], 0.0), (&[0.0], 5.0)), 6.0);
        assert!((rho_tilde_1(&[1.0], (&[0.0], 0.0), (&[E.powi(3)], 0.0)) - 7.0).abs() < 1e-11);
        assert!((rho_tilde_1(&[1.0], (&[0.0], 0.0), (&[1.0], 10.0)) - 11.0).abs() < 1e-11);
    }

    #[test]
    fn rho_tilde_examples() {
        let m = Model::sol();
        let o = sol_point(0.0, 0.0, 0.0);
        assert_eq!(rho_tilde(&m, &o, &sol_point(0.0, 0.0, 5.0)), 7.0);
        assert!((rho_tilde(&m, &o, &sol_point(E.powi(3), E * E, 0.0)) - 12.0).abs() < 1e-11);
        assert!((rho_tilde(&m, &o, &sol_point(1.0, 1.0, 4.0)) - 6.0).abs() < 1e-11);
    }

    #[test]
    fn rho_tilde_is_sum_of_factors() {
        let m = Model::sol();
        let pts = [
            (sol_point(0.0, 0.0, 0.0), sol_point(30.0, 0.01, 1.0)),
            (sol_point(2.0, -5.0, -1.0), sol_point(-3.0, 7.0, 2.5)),
            (sol_point(0.1, 40.0, 3.0), sol_point(0.2, -40.0, 0.0)),
        ];
        for (p, q) in pts {
            let lhs = rho_tilde(&m, &p, &q);
            let rhs = rho_tilde_1(&[1.0], (&p.n1, p.height), (&q.n1, q.height))
                + rho_tilde_2(&[1.0], (&p.n2, p.height), (&q.n2, q.height))
                - (p.height - q.height).abs();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn rho_examples() {
        let m = Model::sol();
        let id = FrameMetric::identity(3);
        let o = sol_point(0.0, 0.0, 0.0);
        assert_eq!(rho_closed_form(&m, &id, &o, &o).unwrap(), 0.0);
        assert!((rho_closed_form(&m, &id, &o, &sol_point(0.0, 0.0, 5.0)).unwrap() - 5.0).abs() < 1e-12);
        let r = rho_closed_form(&m, &id, &o, &sol_point(1.0, 0.0, 0.0)).unwrap();
        assert!((r - 1.5f64.acosh()).abs() < 1e-14);
        let h = Model::hyperbolic_plane();
        assert_eq!(
            rho_closed_form(&h, &FrameMetric::identity(2), &h.identity(), &h.identity()),
            Err(CoarseError::NotSolType)
        );
    }

    #[test]
    fn coarse_path_examples() {
        let m = Model::sol();
        let id = FrameMetric::identity(3);
        let p = sol_point(0.5, -0.2, 1.0);
        assert_eq!(coarse_path(&m, &id, &p, &p).unwrap().length, 0.0);

        let q = sol_point(E.powi(3), E * E, 0.0);
        let path = coarse_path(&m, &id, &sol_point(0.0, 0.0, 0.0), &q).unwrap();
        let heights: Vec<f64> = path.waypoints.iter().map(|w| w.height).collect();
        assert!((heights[1] + 2.0).abs() < 1e-11 && (heights[3] - 3.0).abs() < 1e-11);
        assert!((path.length - 12.0).abs() <= 2.0 + 1e-9);

        let vertical = coarse_path(&m, &id, &sol_point(1.0, 1.0, -2.0), &sol_point(1.0, 1.0, 1.5)).unwrap();
        assert!((vertical.length - 3.5).abs() < 1e-12);
        assert!(vertical.waypoints.iter().all(|w| w.n1 == vec![1.0] && w.n2 == vec![1.0]));

        let skew = FrameMetric::from_rows(&[vec![1.0, 0.1, 0.0], vec![0.1, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(coarse_path(&m, &skew, &p, &q), Err(CoarseError::NonDiagonalMetric));
    }

    #[test]
    fn coarse_path_reversal_is_symmetric() {
        let m = Model::SolType(SolTypeModel::from_raw(vec![1.0], vec![2.0], 1.0).unwrap());
        let id = FrameMetric::identity(3);
        let p = sol_point(3.0, 0.0, 2.0);
        let q = sol_point(-4.0, 9.0, -1.0);
        let a = coarse_path(&m, &id, &p, &q).unwrap();
        let b = coarse_path(&m, &id, &q, &p).unwrap();
        assert!((a.length - b.length).abs() < 1e-12);
        assert_eq!(a.waypoints.first(), Some(&p));
        assert_eq!(b.waypoints.first(), Some(&q));
    }

    #[test]
    fn shadow_examples() {
        let h = Model::hyperbolic_plane();
        let id = FrameMetric::identity(2);
        let base = h.identity();
        assert_eq!(shadow_coset(&h, &id, &id, &base).unwrap(), base);

        // Q(e_1, v) = 0 for v = (1, 1) means Q_01 = −Q_00
        let q2 = FrameMetric::from_rows(&[vec![1.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        assert_eq!(h.perpendicular_section(&q2).unwrap().as_slice(), &[1.0, 1.0]);
        let shadow = shadow_coset(&h, &id, &q2, &base).unwrap();
        assert!((shadow.n1[0] - 1.0).abs() < 1e-15 && shadow.height == 0.0);

        // same-height points of the two cosets stay within bounded distance
        let v2 = [1.0, 1.0];
        let mut sup: f64 = 0.0;
        for k in -20..=20 {
            let t = k as f64;
            let a = h.coset_point(&base, &[0.0, 1.0], t).unwrap();
            let b = h.coset_point(&shadow, &v2, t).unwrap();
            sup = sup.max(hyperbolic_distance(1.0, (a.n1[0], t), (b.n1[0], t)));
        }
        assert!(sup < 1.0, "sup {sup}");

        let shifted = h.coset_point(&base, &[0.0, 1.0], 7.0).unwrap();
        assert_eq!(shadow_coset(&h, &id, &q2, &shifted).unwrap(), shadow);
    }
}
