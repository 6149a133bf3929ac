//! Continuous model groups with abelian nilradical and diagonal derivation.
//!
//! A point is `(n, t)` with `n ∈ R^k` (the nilradical, split into an expanded
//! block `n1` and a contracted block `n2` for Sol-type groups) and height `t`.
//! The group law is
//!
//! ```text
//! (n, t) · (n', t') = (n + e^{tD} n', t + t')
//! ```
//!
//! with `D = diag(a)` for a Heintze group and `D = diag(a) ⊕ (−λ·diag(b))` for a
//! Sol-type group. Every formula downstream (frames, critical heights, lattice
//! layers) assumes this convention.
//!
//! Lie algebra vectors and [`FrameMetric`] matrices are expressed in the
//! left-invariant frame `(e^{δ_i t} ∂_{n_i}, ∂_t)`, where `δ` is the diagonal of
//! `D`. At the identity this frame is the coordinate frame.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const NORMALIZATION_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a model needs at least one derivation eigenvalue")]
    NoEigenvalues,
    #[error("derivation eigenvalue {0} is not positive and finite")]
    NonPositiveEigenvalue(f64),
    #[error("smallest derivation eigenvalue is {0}, expected 1")]
    NotNormalized(f64),
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame metric is not symmetric")]
    NotSymmetric,
    #[error("frame metric is not positive definite")]
    NotPositiveDefinite,
    #[error("one-parameter subgroup generator has zero height component")]
    HorizontalGenerator,
    #[error("invalid model specification: {0}")]
    Spec(String),
}

/// Heintze group `R^k ⋊_D R` with `D = diag(a_1, …, a_k)`, `a_i > 0`, `min a_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeintzeModel {
    eigenvalues: Vec<f64>,
}

impl HeintzeModel {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self, ModelError> {
        check_positive(&eigenvalues)?;
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if (min - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ModelError::NotNormalized(min));
        }
        Ok(Self { eigenvalues })
    }

    /// Rescales arbitrary positive eigenvalues so the smallest is one.
    /// Returns the model and the factor that was divided out.
    pub fn normalized(eigenvalues: Vec<f64>) -> Result<(Self, f64), ModelError> {
        check_positive(&eigenvalues)?;
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let eigenvalues = eigenvalues.into_iter().map(|a| a / min).collect();
        Ok((Self { eigenvalues }, min))
    }

    /// The real hyperbolic plane: `k = 1`, `a = 1`.
    pub fn hyperbolic_plane() -> Self {
        Self { eigenvalues: vec![1.0] }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

fn check_positive(eigenvalues: &[f64]) -> Result<(), ModelError> {
    if eigenvalues.is_empty() {
        return Err(ModelError::NoEigenvalues);
    }
    for &a in eigenvalues {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::NonPositiveEigenvalue(a));
        }
    }
    Ok(())
}

/// Sol-type group `(R^{k1} × R^{k2}) ⋊ R` with derivation `D1 ⊕ (−λ D2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolTypeModel {
    up: HeintzeModel,
    down: HeintzeModel,
    lambda: f64,
}

impl SolTypeModel {
    pub fn new(up: HeintzeModel, down: HeintzeModel, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ModelError::BadLambda(lambda));
        }
        Ok(Self { up, down, lambda })
    }

    /// Builds a model from unnormalized contracting eigenvalues: `b = (2)`,
    /// `λ = 1` becomes `b = (1)`, `λ = 2`. The derivation is unchanged.
    pub fn from_raw(up: Vec<f64>, down: Vec<f64>, lambda: f64) -> Result<Self, ModelError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ModelError::BadLambda(lambda));
        }
        let up = HeintzeModel::new(up)?;
        let (down, scale) = HeintzeModel::normalized(down)?;
        Self::new(up, down, lambda * scale)
    }

    /// The three-dimensional group SOL: `a = b = λ = 1`.
    pub fn sol() -> Self {
        Self {
            up: HeintzeModel::hyperbolic_plane(),
            down: HeintzeModel::hyperbolic_plane(),
            lambda: 1.0,
        }
    }

    pub fn up(&self) -> &HeintzeModel {
        &self.up
    }

    pub fn down(&self) -> &HeintzeModel {
        &self.down
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Contraction rates `λ b_j` of the second factor.
    pub fn down_rates(&self) -> Vec<f64> {
        self.down.eigenvalues.iter().map(|b| self.lambda * b).collect()
    }

    pub fn unimodular(&self) -> bool {
        let lhs = self.up.trace();
        let rhs = self.lambda * self.down.trace();
        (lhs - rhs).abs() <= 1e-12 * lhs.max(rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Heintze(HeintzeModel),
    #[serde(rename = "soltype")]
    SolType(SolTypeModel),
}

impl Model {
    pub fn sol() -> Self {
        Model::SolType(SolTypeModel::sol())
    }

    pub fn hyperbolic_plane() -> Self {
        Model::Heintze(HeintzeModel::hyperbolic_plane())
    }

    pub fn up_dim(&self) -> usize {
        match self {
            Model::Heintze(m) => m.dim(),
            Model::SolType(m) => m.up.dim(),
        }
    }

    pub fn down_dim(&self) -> usize {
        match self {
            Model::Heintze(_) => 0,
            Model::SolType(m) => m.down.dim(),
        }
    }

    /// Dimension of the nilradical.
    pub fn nil_dim(&self) -> usize {
        self.up_dim() + self.down_dim()
    }

    /// Dimension of the group.
    pub fn dim(&self) -> usize {
        self.nil_dim() + 1
    }

    /// Diagonal `δ` of the derivation: `a` followed by `−λ b`.
    pub fn derivation(&self) -> Vec<f64> {
        match self {
            Model::Heintze(m) => m.eigenvalues.clone(),
            Model::SolType(m) => m
                .up
                .eigenvalues
                .iter()
                .copied()
                .chain(m.down.eigenvalues.iter().map(|b| -m.lambda * b))
                .collect(),
        }
    }

    pub fn up_eigenvalues(&self) -> &[f64] {
        match self {
            Model::Heintze(m) => m.eigenvalues(),
            Model::SolType(m) => m.up.eigenvalues(),
        }
    }

    /// Contraction rates `λ b_j` (empty for Heintze models).
    pub fn down_rates(&self) -> Vec<f64> {
        match self {
            Model::Heintze(_) => Vec::new(),
            Model::SolType(m) => m.down_rates(),
        }
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint {
            n1: vec![0.0; self.up_dim()],
            n2: vec![0.0; self.down_dim()],
            height: 0.0,
        }
    }

    pub fn point(&self, n1: Vec<f64>, n2: Vec<f64>, height: f64) -> Result<GroupPoint, ModelError> {
        let p = GroupPoint { n1, n2, height };
        self.check_point(&p)?;
        Ok(p)
    }

    /// Builds a point from flat coordinates `(n1…, n2…, t)`.
    pub fn point_from_coords(&self, coords: &[f64]) -> Result<GroupPoint, ModelError> {
        if coords.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let k1 = self.up_dim();
        let k = self.nil_dim();
        Ok(GroupPoint {
            n1: coords[..k1].to_vec(),
            n2: coords[k1..k].to_vec(),
            height: coords[k],
        })
    }

    pub fn check_point(&self, p: &GroupPoint) -> Result<(), ModelError> {
        if p.n1.len() != self.up_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.up_dim(),
                got: p.n1.len(),
            });
        }
        if p.n2.len() != self.down_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.down_dim(),
                got: p.n2.len(),
            });
        }
        Ok(())
    }

    fn check_metric(&self, q: &FrameMetric) -> Result<(), ModelError> {
        if q.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: q.dim(),
            });
        }
        Ok(())
    }

    /// `p · q` under the semidirect product law.
    pub fn multiply(&self, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint, ModelError> {
        self.check_point(p)?;
        self.check_point(q)?;
        let delta = self.derivation();
        let mut nil = p.nil();
        for ((x, y), d) in nil.iter_mut().zip(q.nil_iter()).zip(&delta) {
            *x += (d * p.height).exp() * y;
        }
        Ok(self.nil_point(&nil, p.height + q.height))
    }

    /// `(n, t)^{-1} = (−e^{−tD} n, −t)`.
    pub fn inverse(&self, p: &GroupPoint) -> Result<GroupPoint, ModelError> {
        self.check_point(p)?;
        let delta = self.derivation();
        let nil: Vec<f64> = p
            .nil_iter()
            .zip(&delta)
            .map(|(x, d)| -(-d * p.height).exp() * x)
            .collect();
        Ok(self.nil_point(&nil, -p.height))
    }

    pub(crate) fn nil_point(&self, nil: &[f64], height: f64) -> GroupPoint {
        let k1 = self.up_dim();
        GroupPoint {
            n1: nil[..k1].to_vec(),
            n2: nil[k1..].to_vec(),
            height,
        }
    }

    /// Coordinate expression `J(t)ᵀ Q J(t)` of the left-invariant metric at `p`,
    /// with `J(t) = diag(e^{−δ_i t}, 1)`.
    pub fn metric_tensor_at(&self, q: &FrameMetric, p: &GroupPoint) -> Result<DMatrix<f64>, ModelError> {
        self.check_metric(q)?;
        self.check_point(p)?;
        let jac = self.frame_jacobian(p.height);
        Ok(DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            jac[i] * q.matrix[(i, j)] * jac[j]
        }))
    }

    /// Diagonal of `J(t)`: coordinate components to frame components.
    pub fn frame_jacobian(&self, height: f64) -> Vec<f64> {
        self.derivation()
            .iter()
            .map(|d| (-d * height).exp())
            .chain(std::iter::once(1.0))
            .collect()
    }

    /// Generator `v = (u, 1)` of the one-parameter subgroup whose tangent at
    /// the identity is `Q`-orthogonal to the nilradical.
    pub fn perpendicular_section(&self, q: &FrameMetric) -> Result<DVector<f64>, ModelError> {
        self.check_metric(q)?;
        let k = self.nil_dim();
        let block = q.matrix.view((0, 0), (k, k)).into_owned();
        let coupling = q.matrix.view((0, k), (k, 1)).into_owned();
        let chol = block.cholesky().ok_or(ModelError::NotPositiveDefinite)?;
        let u = -chol.solve(&coupling);
        let mut v = DVector::zeros(k + 1);
        v.rows_mut(0, k).copy_from(&u);
        v[k] = 1.0;
        Ok(v)
    }

    /// Rescales `Q` so the perpendicular section has unit speed.
    pub fn normalize_metric(&self, q: &FrameMetric) -> Result<FrameMetric, ModelError> {
        let v = self.perpendicular_section(q)?;
        let speed2 = q.norm_squared(&v);
        FrameMetric::new(&q.matrix / speed2)
    }

    /// `exp(τ v)` for a generator with nonzero height component.
    ///
    /// With `v = (u, v_t)`: `c(τ) = ((e^{τ v_t D} − I)(v_t D)^{-1} u, τ v_t)`.
    pub fn one_param_subgroup(&self, v: &[f64], tau: f64) -> Result<GroupPoint, ModelError> {
        if v.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let k = self.nil_dim();
        let vt = v[k];
        if vt == 0.0 {
            return Err(ModelError::HorizontalGenerator);
        }
        let delta = self.derivation();
        let nil: Vec<f64> = v[..k]
            .iter()
            .zip(&delta)
            .map(|(u, d)| u * exp_m1_over(d * vt, tau))
            .collect();
        Ok(self.nil_point(&nil, tau * vt))
    }

    /// Point at height `height` on the left coset `base · c`, where `c` is the
    /// one-parameter subgroup of `v = (u, 1)`.
    pub fn coset_point(&self, base: &GroupPoint, v: &[f64], height: f64) -> Result<GroupPoint, ModelError> {
        let vt = *v.get(self.nil_dim()).ok_or(ModelError::DimensionMismatch {
            expected: self.dim(),
            got: v.len(),
        })?;
        if vt == 0.0 {
            return Err(ModelError::HorizontalGenerator);
        }
        let c = self.one_param_subgroup(v, (height - base.height) / vt)?;
        self.multiply(base, &c)
    }
}

/// `(e^{r τ} − 1) / r`, continuous at `r = 0`.
pub(crate) fn exp_m1_over(r: f64, tau: f64) -> f64 {
    if r == 0.0 {
        tau
    } else {
        (r * tau).exp_m1() / r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub height: f64,
}

impl GroupPoint {
    pub fn nil_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.n1.iter().chain(&self.n2).copied()
    }

    /// Nilradical coordinates `(n1…, n2…)`.
    pub fn nil(&self) -> Vec<f64> {
        self.nil_iter().collect()
    }

    /// Flat coordinates `(n1…, n2…, t)`.
    pub fn coords(&self) -> Vec<f64> {
        self.nil_iter().chain(std::iter::once(self.height)).collect()
    }
}

/// Positive-definite inner product on the Lie algebra, written in the
/// left-invariant frame `(e^{δ_i t} ∂_{n_i}, ∂_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetric {
    matrix: DMatrix<f64>,
}

impl FrameMetric {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, ModelError> {
        if !matrix.is_square() {
            return Err(ModelError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        let scale = matrix.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(ModelError::NotSymmetric);
                }
            }
        }
        if matrix.iter().any(|x| !x.is_finite()) || matrix.clone().cholesky().is_none() {
            return Err(ModelError::NotPositiveDefinite);
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::Spec("frame metric must be a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self, ModelError> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(&self.matrix * factor)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == 0.0))
    }

    /// `vᵀ Q v`.
    pub fn norm_squared(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.matrix * v))
    }

    /// `Q`-length of a frame vector given as a slice.
    pub fn norm(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.matrix[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc.max(0.0).sqrt()
    }
}

impl Serialize for FrameMetric {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FrameMetric {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        FrameMetric::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// JSON model description consumed by the command line:
///
/// ```json
/// {"type": "soltype", "eigenvalues_up": [1], "eigenvalues_down": [1],
///  "lambda": 1.0, "frame_metric": [[1,0,0],[0,1,0],[0,0,1]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub eigenvalues_up: Vec<f64>,
    #[serde(default)]
    pub eigenvalues_down: Vec<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub frame_metric: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heintze,
    Soltype,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Spec(e.to_string()))
    }

    pub fn model(&self) -> Result<Model, ModelError> {
        match self.kind {
            ModelKind::Heintze => {
                if !self.eigenvalues_down.is_empty() {
                    return Err(ModelError::Spec(
                        "heintze models take no eigenvalues_down".into(),
                    ));
                }
                Ok(Model::Heintze(HeintzeModel::new(self.eigenvalues_up.clone())?))
            }
            ModelKind::Soltype => Ok(Model::SolType(SolTypeModel::from_raw(
                self.eigenvalues_up.clone(),
                self.eigenvalues_down.clone(),
                self.lambda,
            )?)),
        }
    }

    /// The frame metric, defaulting to the identity.
    pub fn metric(&self) -> Result<FrameMetric, ModelError> {
        let model = self.model()?;
        match &self.frame_metric {
            None => Ok(FrameMetric::identity(model.dim())),
            Some(rows) => {
                let q = FrameMetric::from_rows(rows)?;
                if q.dim() != model.dim() {
                    return Err(ModelError::DimensionMismatch {
                        expected: model.dim(),
                        got: q.dim(),
                    });
                }
                Ok(q)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn sol_point(x: f64, y: f64, t: f64) -> GroupPoint {
        GroupPoint { n1: vec![x], n2: vec![y], height: t }
    }

    /// Brute-force `exp(tD)` by truncated power series, independent of the
    /// elementwise exponential used in `multiply`.
    fn series_expm_diag(diag: &[f64], t: f64) -> Vec<f64> {
        diag.iter()
            .map(|d| {
                let x = d * t;
                let mut term = 1.0;
                let mut sum = 1.0;
                for k in 1..60 {
                    term *= x / k as f64;
                    sum += term;
                }
                sum
            })
            .collect()
    }

    #[test]
    fn identity_is_neutral() {
        let m = Model::sol();
        let p = sol_point(1.5, -2.0, 0.7);
        assert_eq!(m.multiply(&m.identity(), &p).unwrap(), p);
        assert_eq!(m.multiply(&p, &m.identity()).unwrap(), p);
    }

    #[test]
    fn sol_vertical_then_horizontal() {
        let m = Model::sol();
        let r = m.multiply(&sol_point(0.0, 0.0, 1.0), &sol_point(1.0, 0.0, 0.0)).unwrap();
        let expm = series_expm_diag(&m.derivation(), 1.0);
        assert!((r.n1[0] - expm[0]).abs() < 1e-14);
        assert!((r.n1[0] - E).abs() < 1e-14);
        assert_eq!(r.n2[0], 0.0);
        assert_eq!(r.height, 1.0);
    }

    #[test]
    fn inverse_law() {
        let m = Model::sol();
        let p = sol_point(3.0, -1.25, 2.5);
        let e = m.multiply(&p, &m.inverse(&p).unwrap()).unwrap();
        assert!(e.coords().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = Model::sol();
        let bad = GroupPoint { n1: vec![0.0, 1.0], n2: vec![0.0], height: 0.0 };
        assert!(matches!(
            m.multiply(&bad, &m.identity()),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn metric_tensor_examples() {
        let m = Model::sol();
        let q = FrameMetric::identity(3);
        let g0 = m.metric_tensor_at(&q, &m.identity()).unwrap();
        assert_eq!(g0, DMatrix::identity(3, 3));
        let g1 = m.metric_tensor_at(&q, &sol_point(5.0, 2.0, 1.0)).unwrap();
        assert!((g1[(0, 0)] - (-2.0f64).exp()).abs() < 1e-15);
        assert!((g1[(1, 1)] - 2.0f64.exp()).abs() < 1e-12);
        assert_eq!(g1[(2, 2)], 1.0);
        let q4 = FrameMetric::diagonal(&[1.0, 1.0, 4.0]).unwrap();
        for t in [-3.0, 0.0, 2.5] {
            let g = m.metric_tensor_at(&q4, &sol_point(0.0, 0.0, t)).unwrap();
            assert_eq!(g[(2, 2)], 4.0);
        }
    }

    #[test]
    fn perpendicular_section_examples() {
        let h2 = Model::hyperbolic_plane();
        let v = h2.perpendicular_section(&FrameMetric::identity(2)).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 1.0]);

        let q = FrameMetric::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let v = h2.perpendicular_section(&q).unwrap();
        assert!((v[0] + 0.5).abs() < 1e-15);
        // residual oracle: Q(e_1, v) = 0
        let residual = q.entry(0, 0) * v[0] + q.entry(0, 1) * v[1];
        assert!(residual.abs() < 1e-15);

        let q9 = FrameMetric::diagonal(&[1.0, 1.0, 9.0]).unwrap();
        let v = Model::sol().perpendicular_section(&q9).unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalize_examples() {
        let h2 = Model::hyperbolic_plane();
        let q = FrameMetric::diagonal(&[1.0, 4.0]).unwrap();
        let n = h2.normalize_metric(&q).unwrap();
        assert!((n.entry(0, 0) - 0.25).abs() < 1e-15 && (n.entry(1, 1) - 1.0).abs() < 1e-15);

        let q = FrameMetric::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let n = h2.normalize_metric(&q).unwrap();
        assert!((n.entry(1, 1) - 2.0 / 1.75).abs() < 1e-14);
        let v = h2.perpendicular_section(&n).unwrap();
        assert!((n.norm_squared(&v) - 1.0).abs() < 1e-14);
        let again = h2.normalize_metric(&n).unwrap();
        assert!((again.matrix() - n.matrix()).amax() < 1e-12);
    }

    #[test]
    fn one_param_subgroup_examples() {
        let m = Model::sol();
        let c = m.one_param_subgroup(&[0.0, 0.0, 1.0], 5.0).unwrap();
        assert_eq!(c, sol_point(0.0, 0.0, 5.0));

        let h2 = Model::hyperbolic_plane();
        let far = h2.one_param_subgroup(&[1.0, 1.0], -30.0).unwrap();
        assert!((far.n1[0] + 1.0).abs() < 1e-12);

        let v = [0.3, -0.7, 1.0];
        let c1 = m.one_param_subgroup(&v, 1.0).unwrap();
        let c2 = m.one_param_subgroup(&v, 2.0).unwrap();
        let prod = m.multiply(&c1, &c1).unwrap();
        for (a, b) in prod.coords().iter().zip(c2.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(
            m.one_param_subgroup(&[1.0, 0.0, 0.0], 1.0),
            Err(ModelError::HorizontalGenerator)
        );
    }

    #[test]
    fn model_invariants() {
        assert!(HeintzeModel::new(vec![]).is_err());
        assert!(HeintzeModel::new(vec![1.0, -2.0]).is_err());
        assert!(matches!(HeintzeModel::new(vec![2.0, 3.0]), Err(ModelError::NotNormalized(_))));
        let raw = SolTypeModel::from_raw(vec![1.0], vec![2.0], 1.0).unwrap();
        assert_eq!(raw.down().eigenvalues(), &[1.0]);
        assert_eq!(raw.lambda(), 2.0);
        assert!(!raw.unimodular());
        assert!(SolTypeModel::sol().unimodular());
        let m = SolTypeModel::from_raw(vec![1.0, 2.0], vec![1.0], 3.0).unwrap();
        assert!(m.unimodular());
    }

    #[test]
    fn frame_metric_validation() {
        assert_eq!(
            FrameMetric::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]),
            Err(ModelError::NotSymmetric)
        );
        assert_eq!(
            FrameMetric::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(ModelError::NotPositiveDefinite)
        );
    }

    #[test]
    fn model_spec_json() {
        let spec = ModelSpec::from_json(
            r#"{"type":"soltype","eigenvalues_up":[1],"eigenvalues_down":[2],"lambda":1.0,
                "frame_metric":[[2,0,0],[0,1,0],[0,0,1]]}"#,
        )
        .unwrap();
        let model = spec.model().unwrap();
        assert_eq!(model.derivation(), vec![1.0, -2.0]);
        assert_eq!(spec.metric().unwrap().entry(0, 0), 2.0);
        let bad = ModelSpec::from_json(r#"{"type":"heintze","eigenvalues_up":[1],"frame_metric":[[1,0,0],[0,1,0],[0,0,1]]}"#)
            .unwrap();
        assert!(bad.metric().is_err());
        assert!(ModelSpec::from_json(r#"{"type":"heintze"}"#).is_err());
    }
}
