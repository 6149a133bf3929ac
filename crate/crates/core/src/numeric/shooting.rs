//! Geodesic flow of a left-invariant metric and a multiple-shooting refiner.
//!
//! State is `(n, t, w)` with `w` the velocity in the left-invariant frame.
//! Positions evolve by `ṅ_i = e^{δ_i t} w_i`, `ṫ = w_T`, and the frame
//! velocity by the Euler–Arnold equation
//! `Q ẇ = (w_T δ ⊙ (Qw)_N, −Σ_j δ_j w_j (Qw)_j)`, which conserves `wᵀQw`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DistanceEstimate, NumericError};
use crate::model::{FrameMetric, GroupPoint, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Shooting segments; `0` picks one per unit of seed length, at least 12.
    pub segments: usize,
    /// Integrator tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Acceptance threshold on the scaled matching residual.
    pub residual_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { segments: 0, tol: 1e-9, max_iter: 40, residual_tol: 1e-8 }
    }
}

struct Flow {
    k: usize,
    delta: Vec<f64>,
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
}

impl Flow {
    fn new(model: &Model, metric: &FrameMetric) -> Result<Self, NumericError> {
        let q = metric.matrix().clone();
        let q_inv = q.clone().cholesky().ok_or(crate::ModelError::NotPositiveDefinite)?.inverse();
        Ok(Self { k: model.nil_dim(), delta: model.derivation(), q, q_inv })
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let k = self.k;
        let t = y[k];
        let w = DVector::from_column_slice(&y[k + 1..]);
        let qw = &self.q * &w;
        for i in 0..k {
            dy[i] = (self.delta[i] * t).exp() * w[i];
        }
        dy[k] = w[k];
        let mut r = DVector::zeros(k + 1);
        let mut tail = 0.0;
        for i in 0..k {
            r[i] = w[k] * self.delta[i] * qw[i];
            tail += self.delta[i] * w[i] * qw[i];
        }
        r[k] = -tail;
        let wd = &self.q_inv * r;
        dy[k + 1..].copy_from_slice(wd.as_slice());
    }

    fn speed(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        w.dot(&(&self.q * &w)).max(0.0).sqrt()
    }

    /// Integrates over `[0, span]` in place.
    fn advance(&self, y: &mut [f64], span: f64, tol: f64) -> Result<(), NumericError> {
        dopri5(|s, d| self.rhs(s, d), y, span, tol)
    }
}

/// Dormand–Prince 5(4) with step-size control; integrates `y' = f(y)` over `[0, span]`.
fn dopri5<F: Fn(&[f64], &mut [f64])>(f: F, y: &mut [f64], span: f64, tol: f64) -> Result<(), NumericError> {
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut s = 0.0;
    let mut step = span / 16.0;
    f(y, &mut k[0]);
    for _ in 0..200_000 {
        if s >= span {
            return Ok(());
        }
        step = step.min(span - s);
        for stage in 0..6 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[stage].iter().enumerate() {
                    acc += step * a * k[j][i];
                }
                tmp[i] = acc;
            }
            f(&tmp, &mut k[stage + 1]);
        }
        // tmp holds the fifth-order solution, k[6] its derivative
        let mut norm = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * step;
            let scale = tol + tol * y[i].abs().max(tmp[i].abs());
            norm += (e / scale).powi(2);
        }
        let norm = (norm / n as f64).sqrt();
        if !norm.is_finite() {
            step *= 0.2;
            if step < span * 1e-14 {
                return Err(NumericError::BadGrid("geodesic flow blew up".into()));
            }
            continue;
        }
        if norm <= 1.0 {
            s += step;
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        step *= factor;
        if step < span * 1e-14 {
            return Err(NumericError::BadGrid("integrator step underflow".into()));
        }
    }
    Err(NumericError::BadGrid("integrator step limit".into()))
}

/// Endpoint after time `tau` of the geodesic leaving `start` with frame
/// velocity `w0`.
pub fn geodesic_flow(
    model: &Model,
    metric: &FrameMetric,
    start: &GroupPoint,
    w0: &[f64],
    tau: f64,
) -> Result<GroupPoint, NumericError> {
    model.check_point(start)?;
    let flow = Flow::new(model, metric)?;
    if w0.len() != flow.k + 1 {
        return Err(crate::ModelError::DimensionMismatch { expected: flow.k + 1, got: w0.len() }.into());
    }
    let mut y: Vec<f64> = start.coords();
    y.extend_from_slice(w0);
    flow.advance(&mut y, tau, 1e-10)?;
    Ok(model.nil_point(&y[..flow.k], y[flow.k]))
}

/// Multiple-shooting problem from the identity to `target`.
struct Shooting<'a> {
    flow: &'a Flow,
    target: Vec<f64>,
    segments: usize,
    tol: f64,
}

impl Shooting<'_> {
    fn pos(&self) -> usize {
        self.flow.k + 1
    }

    fn unknowns(&self) -> usize {
        self.pos() * (2 * self.segments - 1)
    }

    /// Start state of segment `seg` read from the unknown vector.
    fn start(&self, x: &[f64], seg: usize) -> Vec<f64> {
        let p = self.pos();
        if seg == 0 {
            let mut y = vec![0.0; p];
            y.extend_from_slice(&x[..p]);
            y
        } else {
            let off = p + (seg - 1) * 2 * p;
            x[off..off + 2 * p].to_vec()
        }
    }

    /// Row weights that turn coordinate offsets into approximate metric offsets.
    fn weight(&self, height: f64, row: usize) -> f64 {
        if row < self.flow.k {
            (-self.flow.delta[row] * height).exp()
        } else {
            1.0
        }
    }

    fn segment_residual(&self, seg: usize, y_start: &[f64], x: &[f64]) -> Result<Vec<f64>, NumericError> {
        let p = self.pos();
        let mut y = y_start.to_vec();
        self.flow.advance(&mut y, 1.0 / self.segments as f64, self.tol)?;
        if seg + 1 == self.segments {
            let h = self.target[self.flow.k];
            Ok((0..p).map(|r| self.weight(h, r) * (y[r] - self.target[r])).collect())
        } else {
            let next = self.start(x, seg + 1);
            let h = next[self.flow.k];
            Ok((0..2 * p)
                .map(|r| if r < p { self.weight(h, r) * (y[r] - next[r]) } else { y[r] - next[r] })
                .collect())
        }
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, NumericError> {
        let mut out = Vec::with_capacity(self.unknowns());
        for seg in 0..self.segments {
            out.extend(self.segment_residual(seg, &self.start(x, seg), x)?);
        }
        Ok(out)
    }

    /// Block-structured finite-difference Jacobian.
    fn jacobian(&self, x: &[f64], f0: &[f64]) -> Result<DMatrix<f64>, NumericError> {
        let n = self.unknowns();
        let p = self.pos();
        let mut jac = DMatrix::zeros(n, n);
        for seg in 0..self.segments {
            let row0 = seg * 2 * p;
            let rows = if seg + 1 == self.segments { p } else { 2 * p };
            // own start state
            let (col0, cols) = if seg == 0 { (0, p) } else { (p + (seg - 1) * 2 * p, 2 * p) };
            for c in 0..cols {
                let mut xp = x.to_vec();
                let step = 1e-6 * (1.0 + x[col0 + c].abs());
                xp[col0 + c] += step;
                let r = self.segment_residual(seg, &self.start(&xp, seg), &xp)?;
                for i in 0..rows {
                    jac[(row0 + i, col0 + c)] = (r[i] - f0[row0 + i]) / step;
                }
            }
            // next start state enters linearly, up to the height-dependent weights
            if seg + 1 < self.segments {
                let ncol = p + seg * 2 * p;
                for c in 0..2 * p {
                    let mut xp = x.to_vec();
                    let step = 1e-6 * (1.0 + x[ncol + c].abs());
                    xp[ncol + c] += step;
                    let r = self.segment_residual_cached(seg, x, &xp, f0, row0)?;
                    for i in 0..rows {
                        jac[(row0 + i, ncol + c)] = (r[i] - f0[row0 + i]) / step;
                    }
                }
            }
        }
        Ok(jac)
    }

    fn segment_residual_cached(&self, seg: usize, x: &[f64], xp: &[f64], f0: &[f64], row0: usize) -> Result<Vec<f64>, NumericError> {
        // the flow endpoint does not depend on the next start; recover it from f0
        let p = self.pos();
        let next = self.start(x, seg + 1);
        let h = next[self.flow.k];
        let end: Vec<f64> = (0..2 * p)
            .map(|r| {
                let v = f0[row0 + r];
                if r < p { v / self.weight(h, r) + next[r] } else { v + next[r] }
            })
            .collect();
        let np = self.start(xp, seg + 1);
        let hp = np[self.flow.k];
        Ok((0..2 * p)
            .map(|r| if r < p { self.weight(hp, r) * (end[r] - np[r]) } else { end[r] - np[r] })
            .collect())
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Resamples a polyline at `count` points equally spaced in arclength.
fn resample(model: &Model, metric: &FrameMetric, path: &[GroupPoint], count: usize) -> Vec<Vec<f64>> {
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        let l = super::polyline_length(model, metric, w);
        cum.push(cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    let coords: Vec<Vec<f64>> = path.iter().map(|p| p.coords()).collect();
    (0..count)
        .map(|j| {
            let s = total * j as f64 / (count - 1) as f64;
            let seg = cum.partition_point(|c| *c < s).clamp(1, path.len() - 1);
            let (a, b) = (cum[seg - 1], cum[seg]);
            let f = if b > a { (s - a) / (b - a) } else { 0.0 };
            coords[seg - 1].iter().zip(&coords[seg]).map(|(x, y)| x + f * (y - x)).collect()
        })
        .collect()
}

/// Refines a lattice estimate by solving the geodesic boundary value problem,
/// seeded from the lattice path. The result is the smaller of the two values;
/// the refined one is the length of a geodesic whose endpoint matches `q` to
/// within the residual tolerance.
pub fn shooting_refine(
    model: &Model,
    metric: &FrameMetric,
    p: &GroupPoint,
    q: &GroupPoint,
    initial: &DistanceEstimate,
    opts: &ShootingOptions,
) -> Result<DistanceEstimate, NumericError> {
    let mut out = initial.clone();
    let Some(path) = initial.path.as_ref().filter(|p| p.len() >= 2) else {
        return Ok(out);
    };
    if initial.value == 0.0 {
        return Ok(out);
    }
    let flow = Flow::new(model, metric)?;
    let pinv = model.inverse(p)?;
    let local: Vec<GroupPoint> = path.iter().map(|x| model.multiply(&pinv, x)).collect::<Result<_, _>>()?;
    let target = model.multiply(&pinv, q)?;
    let n = match opts.segments {
        0 => (initial.value.ceil() as usize).clamp(12, 64),
        n => n,
    };
    let sub = 8;
    let samples = resample(model, metric, &local, n * sub + 1);
    let k = flow.k;
    let velocity = |j: usize| -> Vec<f64> {
        let (a, b) = (j.saturating_sub(sub / 2), (j + sub / 2).min(samples.len() - 1));
        let dtau = (b - a) as f64 / (n * sub) as f64;
        let t_mid = samples[j][k];
        (0..=k)
            .map(|i| {
                let d = (samples[b][i] - samples[a][i]) / dtau;
                if i < k { (-flow.delta[i] * t_mid).exp() * d } else { d }
            })
            .collect()
    };

    let problem = Shooting { flow: &flow, target: target.coords(), segments: n, tol: opts.tol };
    let mut x = velocity(0);
    for seg in 1..n {
        x.extend_from_slice(&samples[seg * sub]);
        x.extend(velocity(seg * sub));
    }

    let mut f = match problem.residual(&x) {
        Ok(f) => f,
        Err(e) => {
            out.warning = Some(format!("shooting failed: {e}"));
            return Ok(out);
        }
    };
    let mut fnorm = inf_norm(&f);
    let mut converged = fnorm <= opts.residual_tol;
    for _ in 0..opts.max_iter {
        if converged {
            break;
        }
        let Ok(jac) = problem.jacobian(&x, &f) else { break };
        let Some(dx) = jac.lu().solve(&DVector::from_column_slice(&f)) else { break };
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-4 {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a - alpha * d).collect();
            if let Ok(ft) = problem.residual(&trial) {
                let nt = inf_norm(&ft);
                if nt < fnorm {
                    x = trial;
                    f = ft;
                    fnorm = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        converged = fnorm <= opts.residual_tol;
    }
    if !converged {
        out.warning = Some(format!("shooting did not converge (residual {fnorm:.2e})"));
        return Ok(out);
    }
    let length = flow.speed(&x[..k + 1]);
    if length < out.value {
        out.value = length;
        out.refined = true;
        let mut pts = Vec::with_capacity(n * sub + 1);
        for seg in 0..n {
            let mut y = problem.start(&x, seg);
            for _ in 0..sub {
                pts.push(model.multiply(p, &model.nil_point(&y[..k], y[k]))?);
                flow.advance(&mut y, 1.0 / (n * sub) as f64, opts.tol)?;
            }
        }
        pts.push(q.clone());
        out.path = Some(pts);
    }
    out.warning = None;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::hyperbolic_distance;

    #[test]
    fn h2_flow_matches_closed_form() {
        let m = Model::hyperbolic_plane();
        let q = FrameMetric::identity(2);
        let start = m.identity();
        let w0 = [0.6, 0.8];
        let end = geodesic_flow(&m, &q, &start, &w0, 2.5).unwrap();
        let d = hyperbolic_distance(1.0, (0.0, 0.0), (end.n1[0], end.height));
        assert!((d - 2.5).abs() < 1e-7, "{d}");
    }

    #[test]
    fn speed_is_conserved() {
        let m = Model::sol();
        let q = FrameMetric::from_rows(&[vec![1.0, 0.2, 0.1], vec![0.2, 1.5, 0.0], vec![0.1, 0.0, 1.0]]).unwrap();
        let flow = Flow::new(&m, &q).unwrap();
        let mut y = vec![0.0, 0.0, 0.0, 0.3, -0.5, 0.9];
        let s0 = flow.speed(&y[3..]);
        flow.advance(&mut y, 4.0, 1e-10).unwrap();
        assert!((flow.speed(&y[3..]) - s0).abs() < 1e-8);
    }
}
