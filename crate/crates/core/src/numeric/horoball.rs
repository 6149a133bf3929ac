//! Paths in the hyperbolic plane that avoid a horoball.
//!
//! In coordinates `(x, t)` with metric `e^{−2t}dx² + dt²`, the sets
//! `{t > c}` are horoballs. For `p = (0, 0)` and `q = (R, 0)` with
//! `R = 2 sinh(d/2)`, `d = d(p, q)`, the shortest path in `{t ≤ 0}` is the
//! horocycle arc of length `R`, which exceeds `e^{d/2 − 1}`.

use serde::{Deserialize, Serialize};

use super::{constrained_lattice_distance, path_height_extremes, GridSpec, NumericError};
use crate::model::{FrameMetric, GroupPoint, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoroballRow {
    pub d: f64,
    /// Forced excursion below the horocycle, through `(R/2, −depth)`.
    pub depth: f64,
    pub horocycle_length: f64,
    pub constrained_length: f64,
    /// Height change along the constrained path.
    pub height_change: f64,
    /// `e^{d/2 − 1}`.
    pub exponential_bound: f64,
    /// `2H + e^{d/2 − 1} − 5d`.
    pub excursion_bound: f64,
    /// `|length − R| / R`, only meaningful at depth 0.
    pub relative_error: f64,
}

impl HoroballRow {
    pub fn exceeds_exponential(&self) -> bool {
        self.constrained_length > self.exponential_bound
    }

    pub fn exceeds_excursion_bound(&self) -> bool {
        self.constrained_length >= self.excursion_bound
    }
}

/// Constrained shortest paths between `(0, 0)` and `(2 sinh(d/2), 0)` in
/// `{t ≤ 0}`, one row per `(d, depth)`.
pub fn horoball_experiment(distances: &[f64], depths: &[f64], h: f64) -> Result<Vec<HoroballRow>, NumericError> {
    let model = Model::hyperbolic_plane();
    let metric = FrameMetric::identity(2);
    let below = |x: &GroupPoint| x.height <= 1e-12;
    let mut rows = Vec::new();
    for &d in distances {
        let r = 2.0 * (0.5 * d).sinh();
        let p = GroupPoint { n1: vec![0.0], n2: vec![], height: 0.0 };
        let q = GroupPoint { n1: vec![r], n2: vec![], height: 0.0 };
        for &depth in depths {
            let grid = GridSpec::boxed(h, vec![-1.0, -depth - 1.0], vec![r + 1.0, 0.0]);
            let (length, path) = if depth > 0.0 {
                let w = GroupPoint { n1: vec![0.5 * r], n2: vec![], height: -depth };
                let a = constrained_lattice_distance(&model, &metric, &p, &w, &grid, below)?;
                let b = constrained_lattice_distance(&model, &metric, &w, &q, &grid, below)?;
                let mut path = a.path.unwrap_or_default();
                path.extend(b.path.unwrap_or_default().into_iter().skip(1));
                (a.value + b.value, path)
            } else {
                let est = constrained_lattice_distance(&model, &metric, &p, &q, &grid, below)?;
                (est.value, est.path.unwrap_or_default())
            };
            let (lo, hi) = path_height_extremes(&path)?;
            let exponential_bound = (0.5 * d - 1.0).exp();
            rows.push(HoroballRow {
                d,
                depth,
                horocycle_length: r,
                constrained_length: length,
                height_change: hi - lo,
                exponential_bound,
                excursion_bound: 2.0 * (hi - lo) + exponential_bound - 5.0 * d,
                relative_error: (length - r).abs() / r,
            });
        }
    }
    Ok(rows)
}
