//! Numerical left-invariant distances: lattice Dijkstra, region-constrained
//! shortest paths and a geodesic shooting refiner.

mod horoball;
mod lattice;
mod shooting;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarse::{coset_label, critical_down_or_sentinel, critical_up_or_sentinel};
use crate::model::{FrameMetric, GroupPoint, Model, ModelError};
use lattice::{spacing, Grid, Index, IndexBox, MAX_NIL};

pub use horoball::{horoball_experiment, HoroballRow};
pub use shooting::{geodesic_flow, shooting_refine, ShootingOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("point {0:?} lies outside the grid box")]
    OutsideBox(Vec<f64>),
    #[error("disconnected at this resolution")]
    Disconnected,
    #[error("grid needs {needed} nodes, limit is {limit}")]
    TooManyNodes { needed: usize, limit: usize },
    #[error("nilradical dimension {0} exceeds the supported maximum of 3")]
    UnsupportedDimension(usize),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("path needs at least one point")]
    EmptyPath,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    /// `{−1, 0, 1}^dim`.
    Cube,
    /// Cube plus knight moves in every coordinate plane and two-layer steps.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridRegion {
    /// Windows of half-width `width` (metric units) around the vertical
    /// cosets through both endpoints and their two mixed cosets, over the
    /// height range between the critical heights padded by `margin`.
    /// Widened by 60% up to `max_widen` times when the path reaches an edge.
    Corridor { width: f64, margin: f64, max_widen: u32 },
    /// Axis-aligned coordinate box `(n…, t)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Step in metric units: layer spacing and in-layer cell width.
    pub h: f64,
    pub region: GridRegion,
    pub stencil: Stencil,
    pub max_nodes: usize,
}

impl GridSpec {
    pub fn corridor(h: f64) -> Self {
        Self {
            h,
            region: GridRegion::Corridor { width: 2.0, margin: 2.0, max_widen: 2 },
            stencil: Stencil::Extended,
            max_nodes: 40_000_000,
        }
    }

    pub fn boxed(h: f64, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { region: GridRegion::Box { lo, hi }, ..Self::corridor(h) }
    }

    /// `h = 0.05` for two-dimensional models, `0.1` otherwise.
    pub fn default_for(model: &Model) -> Self {
        Self::corridor(if model.dim() == 2 { 0.05 } else { 0.1 })
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    /// The value is the length of an actual path, up to quadrature error.
    pub upper_bound: bool,
    pub refined: bool,
    pub warning: Option<String>,
    pub path: Option<Vec<GroupPoint>>,
    pub nodes: usize,
}

impl DistanceEstimate {
    fn exact_zero(p: &GroupPoint) -> Self {
        Self { value: 0.0, upper_bound: true, refined: false, warning: None, path: Some(vec![p.clone()]), nodes: 0 }
    }
}

/// Shortest lattice path length between `p` and `q` under the frame metric.
pub fn lattice_distance(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    grid: &GridSpec,
) -> Result<DistanceEstimate, NumericError> {
    run(model, metric, p, q, grid, None)
}

/// Lattice distance followed by [`shooting_refine`].
pub fn refined_distance(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    grid: &GridSpec,
    opts: &ShootingOptions,
) -> Result<DistanceEstimate, NumericError> {
    let est = lattice_distance(model, metric, p, q, grid)?;
    shooting_refine(model, metric, p, q, &est, opts)
}

/// Shortest lattice path using only nodes that satisfy `region`.
pub fn constrained_lattice_distance<R>(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    grid: &GridSpec,
    region: R,
) -> Result<DistanceEstimate, NumericError>
where
    R: Fn(&GroupPoint) -> bool,
{
    if !region(p) || !region(q) {
        return Err(NumericError::Disconnected);
    }
    run(model, metric, p, q, grid, Some(&region))
}

/// Minimum and maximum height along a polyline.
pub fn path_height_extremes(path: &[GroupPoint]) -> Result<(f64, f64), NumericError> {
    if path.is_empty() {
        return Err(NumericError::EmptyPath);
    }
    Ok(path.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.height), hi.max(p.height))
    }))
}

/// Length of a polyline, each segment by the midpoint rule.
pub fn polyline_length(model: &Model, metric: &FrameMetric, path: &[GroupPoint]) -> f64 {
    let delta = model.derivation();
    let k = delta.len();
    path.windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let mid = 0.5 * (a.height + b.height);
            let mut v: Vec<f64> = a
                .nil_iter()
                .zip(b.nil_iter())
                .zip(&delta)
                .map(|((x, y), d)| (-d * mid).exp() * (y - x))
                .collect();
            v.push(b.height - a.height);
            debug_assert_eq!(v.len(), k + 1);
            metric.norm(&v)
        })
        .sum()
}

/// CSV rows `n…, t, cumulative_length` for a polyline.
pub fn path_csv(model: &Model, metric: &FrameMetric, path: &[GroupPoint]) -> String {
    let k1 = model.up_dim();
    let k2 = model.down_dim();
    let mut header: Vec<String> = (1..=k1).map(|i| format!("x{i}")).collect();
    header.extend((1..=k2).map(|i| format!("y{i}")));
    header.push("t".into());
    header.push("cumulative_length".into());
    let mut out = header.join(",");
    out.push('\n');
    let mut acc = 0.0;
    for (i, p) in path.iter().enumerate() {
        if i > 0 {
            acc += polyline_length(model, metric, &path[i - 1..=i]);
        }
        let row: Vec<String> = p.coords().iter().chain(std::iter::once(&acc)).map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

type RegionRef<'a> = Option<&'a dyn Fn(&GroupPoint) -> bool>;

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn run(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    spec: &GridSpec,
    region: RegionRef<'_>,
) -> Result<DistanceEstimate, NumericError> {
    model.check_point(p)?;
    model.check_point(q)?;
    if metric.dim() != model.dim() {
        return Err(ModelError::DimensionMismatch { expected: model.dim(), got: metric.dim() }.into());
    }
    if model.nil_dim() > MAX_NIL {
        return Err(NumericError::UnsupportedDimension(model.nil_dim()));
    }
    if !(spec.h.is_finite() && spec.h > 0.0) {
        return Err(NumericError::BadGrid(format!("step must be positive, got {}", spec.h)));
    }
    // one orientation per unordered pair, so d(p, q) = d(q, p) exactly
    if lex_cmp(&p.coords(), &q.coords()) == Ordering::Greater {
        let mut est = run(model, metric, q, p, spec, region)?;
        if let Some(path) = est.path.as_mut() {
            path.reverse();
        }
        return Ok(est);
    }
    if p == q {
        return Ok(DistanceEstimate::exact_zero(p));
    }
    let mut est = search(model, metric, p, q, spec, region)?;
    if let Some(path) = est.path.as_mut() {
        // translated endpoints carry round-off; pin them to the inputs
        path[0] = p.clone();
        *path.last_mut().expect("nonempty") = q.clone();
    }
    Ok(est)
}

fn search(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    spec: &GridSpec,
    region: RegionRef<'_>,
) -> Result<DistanceEstimate, NumericError> {
    match &spec.region {
        GridRegion::Corridor { width, margin, max_widen } => {
            let origin = p.clone();
            let target = model.multiply(&model.inverse(p)?, q)?;
            let mut width = *width;
            let mut margin = *margin;
            let mut attempt = 0;
            loop {
                let grid = corridor_grid(model, metric, &target, spec, width, margin)?;
                let to_abs = |n: &[f64], t: f64| -> GroupPoint {
                    model.multiply(&origin, &model.nil_point(n, t)).expect("dimensions checked")
                };
                let (est, touched) = solve(model, &grid, &model.identity(), &target, region, &to_abs, spec)?;
                if !touched || attempt >= *max_widen {
                    let mut est = est;
                    if touched {
                        est.warning = Some("path reaches the corridor edge".into());
                    }
                    return Ok(est);
                }
                attempt += 1;
                width *= 1.6;
                margin *= 1.6;
            }
        }
        GridRegion::Box { lo, hi } => {
            let grid = box_grid(model, metric, spec, lo, hi)?;
            for x in [p, q] {
                let c = x.coords();
                if c.iter().zip(lo.iter().zip(hi)).any(|(v, (a, b))| v < a || v > b) {
                    return Err(NumericError::OutsideBox(c));
                }
            }
            let to_abs = |n: &[f64], t: f64| model.nil_point(n, t);
            solve(model, &grid, p, q, region, &to_abs, spec).map(|r| r.0)
        }
    }
}

/// Largest lattice index kept exact by the `f64` coordinate arithmetic.
const MAX_INDEX: f64 = 1e15;

/// Coset column: center `L + e^{δt}u/δ`, active on `[lo, hi]`.
struct Column {
    label: Vec<f64>,
    lo: f64,
    hi: f64,
}

fn corridor_grid(
    model: &Model,
    metric: &FrameMetric,
    target: &GroupPoint,
    spec: &GridSpec,
    width: f64,
    margin: f64,
) -> Result<Grid, NumericError> {
    let h = spec.h;
    let k = model.nil_dim();
    let k1 = model.up_dim();
    let delta = model.derivation();
    let qsqrt: Vec<f64> = (0..k).map(|i| metric.entry(i, i).sqrt()).collect();
    let v = model.perpendicular_section(metric)?;
    let u: Vec<f64> = v.iter().take(k).copied().collect();

    let s = target.height;
    let ht = if s.abs() < 0.5 * h { h } else { s.abs() / (s.abs() / h).ceil() };

    let lp = coset_label(model, &u, &model.identity());
    let lq = coset_label(model, &u, target);
    let weigh = |l: &[f64], range: std::ops::Range<usize>| -> Vec<f64> { range.map(|i| l[i] * qsqrt[i]).collect() };
    let t1 = critical_up_or_sentinel(&delta[..k1], &weigh(&lp, 0..k1), &weigh(&lq, 0..k1));
    let down_rates: Vec<f64> = delta[k1..].iter().map(|d| -d).collect();
    let t2 = if k > k1 {
        critical_down_or_sentinel(&down_rates, &weigh(&lp, k1..k), &weigh(&lq, k1..k))
    } else {
        f64::INFINITY
    };
    let low = t2.min(0.0).min(s) - margin;
    let high = t1.max(0.0).max(s) + margin;

    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> { a[..k1].iter().chain(&b[k1..]).copied().collect() };
    let mut columns: Vec<Column> = Vec::new();
    for label in [lp.clone(), mix(&lp, &lq), mix(&lq, &lp), lq.clone()] {
        if !columns.iter().any(|c| c.label == label) {
            columns.push(Column { label, lo: low, hi: high });
        }
    }

    let j_lo = (low / ht).floor() as i64;
    let j_hi = (high / ht).ceil() as i64;
    let hw = (width / h).ceil() as i64;
    let mut boxes = Vec::with_capacity((j_hi - j_lo + 1) as usize);
    let mut estimate = 0usize;
    for j in j_lo..=j_hi {
        let t = j as f64 * ht;
        let mut layer = Vec::new();
        'columns: for c in columns.iter().filter(|c| t >= c.lo - 1e-12 && t <= c.hi + 1e-12) {
            let mut lo = [0i64; MAX_NIL];
            let mut hi = [0i64; MAX_NIL];
            for i in 0..k {
                let center = c.label[i] + (delta[i] * t).exp() * u[i] / delta[i];
                let ci = (center / spacing(h, delta[i], qsqrt[i], t)).round();
                // a mixed column can sit astronomically far out in cell units;
                // the other mixed column then carries the path
                if !ci.is_finite() || ci.abs() > MAX_INDEX {
                    continue 'columns;
                }
                lo[i] = ci as i64 - hw;
                hi[i] = ci as i64 + hw;
            }
            layer.push(IndexBox { lo, hi, offset: 0 });
            estimate += (2 * hw as usize + 1).pow(k as u32);
        }
        boxes.push(layer);
    }
    if estimate > spec.max_nodes.saturating_mul(4) {
        return Err(NumericError::TooManyNodes { needed: estimate, limit: spec.max_nodes });
    }
    let grid = Grid::new(model, metric, h, ht, j_lo, boxes, spec.stencil == Stencil::Extended);
    if grid.total > spec.max_nodes {
        return Err(NumericError::TooManyNodes { needed: grid.total, limit: spec.max_nodes });
    }
    Ok(grid)
}

fn box_grid(model: &Model, metric: &FrameMetric, spec: &GridSpec, lo: &[f64], hi: &[f64]) -> Result<Grid, NumericError> {
    let k = model.nil_dim();
    if lo.len() != k + 1 || hi.len() != k + 1 || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
        return Err(NumericError::BadGrid("box needs one nonempty interval per coordinate".into()));
    }
    let h = spec.h;
    let ht = h;
    let delta = model.derivation();
    let qsqrt: Vec<f64> = (0..k).map(|i| metric.entry(i, i).sqrt()).collect();
    let j_lo = (lo[k] / ht).floor() as i64;
    let j_hi = (hi[k] / ht).ceil() as i64;
    let mut boxes = Vec::new();
    let mut needed = 0usize;
    for j in j_lo..=j_hi {
        let t = j as f64 * ht;
        let mut blo: Index = [0; MAX_NIL];
        let mut bhi: Index = [0; MAX_NIL];
        let mut size = 1usize;
        for i in 0..k {
            let s = spacing(h, delta[i], qsqrt[i], t);
            let (a, b) = ((lo[i] / s).floor(), (hi[i] / s).ceil());
            if !(a.abs() <= MAX_INDEX && b.abs() <= MAX_INDEX) {
                return Err(NumericError::BadGrid("box too wide for the lattice index at this depth".into()));
            }
            blo[i] = a as i64;
            bhi[i] = b as i64;
            size = size.saturating_mul((bhi[i] - blo[i] + 1) as usize);
        }
        needed = needed.saturating_add(size);
        if needed > spec.max_nodes {
            return Err(NumericError::TooManyNodes { needed, limit: spec.max_nodes });
        }
        boxes.push(vec![IndexBox { lo: blo, hi: bhi, offset: 0 }]);
    }
    Ok(Grid::new(model, metric, h, ht, j_lo, boxes, spec.stencil == Stencil::Extended))
}

/// Grid nodes near an off-lattice point, with straight-segment weights.
fn attachments(grid: &Grid, n: &[f64], t: f64) -> Vec<(usize, f64)> {
    let k = grid.k;
    let jf = t / grid.ht - grid.j0 as f64;
    let mut out = Vec::new();
    let first = (jf.floor() as i64 - 1).max(0);
    let last = (jf.ceil() as i64 + 1).min(grid.layers.len() as i64 - 1);
    for layer in first..=last {
        let layer = layer as usize;
        let mut lo = [0i64; MAX_NIL];
        let mut hi = [0i64; MAX_NIL];
        for i in 0..k {
            let f = n[i] / grid.spacing(layer, i);
            lo[i] = f.floor() as i64 - 1;
            hi[i] = f.ceil() as i64 + 1;
        }
        let mut m = lo;
        'walk: loop {
            if let Some(id) = grid.lookup(layer, &m) {
                let (nn, tt) = grid.coords(id);
                out.push((id, grid.segment(n, t, &nn, tt)));
            }
            for i in 0..k {
                if m[i] < hi[i] {
                    m[i] += 1;
                    continue 'walk;
                }
                m[i] = lo[i];
            }
            break;
        }
    }
    out
}

fn solve(
    model: &Model,
    grid: &Grid,
    a: &GroupPoint,
    b: &GroupPoint,
    region: RegionRef<'_>,
    to_abs: &dyn Fn(&[f64], f64) -> GroupPoint,
    spec: &GridSpec,
) -> Result<(DistanceEstimate, bool), NumericError> {
    let (na, nb) = (a.nil(), b.nil());
    let allowed = |id: usize| match region {
        None => true,
        Some(r) => {
            let (n, t) = grid.coords(id);
            r(&to_abs(&n, t))
        }
    };
    let sources: Vec<(usize, f64)> = attachments(grid, &na, a.height).into_iter().filter(|e| allowed(e.0)).collect();
    let targets: Vec<(usize, f64)> = attachments(grid, &nb, b.height).into_iter().filter(|e| allowed(e.0)).collect();
    let direct = grid.segment(&na, a.height, &nb, b.height);
    let direct = (direct <= 3.0 * spec.h).then_some(direct);
    let search = lattice::dijkstra(grid, &sources, &targets, direct, allowed).ok_or(NumericError::Disconnected)?;

    let last_layer = grid.layers.len() - 1;
    let touched = search.nodes.iter().any(|&id| {
        let (layer, _) = grid.decode(id);
        layer == 0 || layer == last_layer || grid.on_lateral_boundary(id)
    });
    let mut path = Vec::with_capacity(search.nodes.len() + 2);
    path.push(to_abs(&na, a.height));
    for &id in &search.nodes {
        let (n, t) = grid.coords(id);
        path.push(to_abs(&n, t));
    }
    path.push(to_abs(&nb, b.height));
    let _ = model;
    Ok((
        DistanceEstimate {
            value: search.value,
            upper_bound: true,
            refined: false,
            warning: None,
            path: Some(path),
            nodes: grid.total,
        },
        touched,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::hyperbolic_distance;

    fn h2() -> (Model, FrameMetric) {
        (Model::hyperbolic_plane(), FrameMetric::identity(2))
    }

    fn pt(x: f64, t: f64) -> GroupPoint {
        GroupPoint { n1: vec![x], n2: vec![], height: t }
    }

    #[test]
    fn zero_distance() {
        let (m, q) = h2();
        let p = pt(0.3, 0.1);
        assert_eq!(lattice_distance(&m, &q, &p, &p, &GridSpec::corridor(0.05)).unwrap().value, 0.0);
    }

    #[test]
    fn h2_horizontal_pair() {
        let (m, q) = h2();
        let est = lattice_distance(&m, &q, &pt(0.0, 0.0), &pt(1.0, 0.0), &GridSpec::corridor(0.02)).unwrap();
        let exact = 1.5f64.acosh();
        assert!((est.value - exact).abs() / exact < 0.02, "{} vs {exact}", est.value);
    }

    #[test]
    fn h2_far_pair() {
        let (m, q) = h2();
        let (a, b) = (pt(-3.0, 0.5), pt(40.0, -1.0));
        let est = lattice_distance(&m, &q, &a, &b, &GridSpec::corridor(0.05)).unwrap();
        let exact = hyperbolic_distance(1.0, (-3.0, 0.5), (40.0, -1.0));
        assert!(est.value >= exact - 1e-9);
        assert!((est.value - exact) / exact < 0.03, "{} vs {exact}", est.value);
    }

    #[test]
    fn sol_vertical() {
        let m = Model::sol();
        let q = FrameMetric::identity(3);
        let a = GroupPoint { n1: vec![0.0], n2: vec![0.0], height: 0.0 };
        let b = GroupPoint { n1: vec![0.0], n2: vec![0.0], height: 3.0 };
        let est = lattice_distance(&m, &q, &a, &b, &GridSpec::corridor(0.1)).unwrap();
        assert!((est.value - 3.0).abs() <= 0.1, "{}", est.value);
    }

    #[test]
    fn symmetric_exactly() {
        let (m, q) = h2();
        let (a, b) = (pt(0.7, -0.3), pt(-2.0, 1.1));
        let g = GridSpec::corridor(0.05);
        let d1 = lattice_distance(&m, &q, &a, &b, &g).unwrap();
        let d2 = lattice_distance(&m, &q, &b, &a, &g).unwrap();
        assert_eq!(d1.value, d2.value);
        assert_eq!(d1.path.as_ref().unwrap().first(), Some(&a));
        assert_eq!(d2.path.as_ref().unwrap().first(), Some(&b));
    }

    #[test]
    fn constrained_examples() {
        let (m, q) = h2();
        let (a, b) = (pt(0.0, 0.0), pt(6.0, 0.0));
        let g = GridSpec::boxed(0.05, vec![-1.0, -1.5], vec![7.0, 3.0]);
        let free = lattice_distance(&m, &q, &a, &b, &g).unwrap();
        let everything = constrained_lattice_distance(&m, &q, &a, &b, &g, |_| true).unwrap();
        assert_eq!(free.value, everything.value);
        let below = constrained_lattice_distance(&m, &q, &a, &b, &g, |x| x.height <= 1e-9).unwrap();
        assert!((below.value - 6.0).abs() / 6.0 < 0.03, "{}", below.value);
        let cut = constrained_lattice_distance(&m, &q, &a, &b, &g, |x| (x.n1[0] - 3.0).abs() > 2.5);
        assert_eq!(cut.unwrap_err(), NumericError::Disconnected);
        let outside = lattice_distance(&m, &q, &a, &pt(9.0, 0.0), &g);
        assert!(matches!(outside, Err(NumericError::OutsideBox(_))));
    }

    #[test]
    fn height_extremes() {
        let path = vec![pt(0.0, 0.0), pt(0.0, 3.0)];
        assert_eq!(path_height_extremes(&path).unwrap(), (0.0, 3.0));
        assert_eq!(path_height_extremes(&[pt(1.0, 2.5)]).unwrap(), (2.5, 2.5));
        assert_eq!(path_height_extremes(&[]), Err(NumericError::EmptyPath));
    }
}
