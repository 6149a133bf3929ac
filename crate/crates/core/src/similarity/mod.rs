//! Empirical rough-similarity tests between two distance evaluators.
//!
//! A [`SimilarityReport`] records the fitted scale `λ̂` (median of `d₁/d₂`
//! over the longest-range samples), per-bucket maxima of `|d₁ − λ̂ d₂|` and
//! the least-squares trend of those maxima against separation. Verdicts are
//! thresholds on that trend, not proofs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarse::{rho_tilde, rho_tilde_1};
use crate::model::{GroupPoint, Model};
use crate::par;

mod experiments;

pub use experiments::{
    coarse_formula_experiment, heintze_metric_experiment, soltype_metric_experiment, Discretization, ExperimentConfig,
    ExperimentError, ExperimentReport, SampleRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError<E> {
    #[error("evaluator failed on sample {index}: {source}")]
    Evaluator { index: usize, source: E },
    #[error("need at least {needed} long-range samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    RoughIsometry,
    RoughSimilarity,
    NotRoughlySimilar,
    Inconclusive,
}

/// A pair of points with the separation used for bucketing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<P> {
    pub p: P,
    pub q: P,
    pub separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaMode {
    Fit,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub buckets: usize,
    pub min_count: usize,
    pub lambda: LambdaMode,
    /// Bucket-max slope at or below which residuals count as non-trending.
    pub flat_slope: f64,
    /// Bucket-max slope at or above which residuals count as growing.
    pub trending_slope: f64,
    pub isometry_tolerance: f64,
    /// Allowance for the coarse additive constant.
    pub coarse_budget: f64,
    /// Allowance for discretization error of the evaluators.
    pub discretization_budget: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            buckets: 6,
            min_count: 10,
            lambda: LambdaMode::Fit,
            flat_slope: 0.05,
            trending_slope: 0.2,
            isometry_tolerance: 0.05,
            coarse_budget: 10.0,
            discretization_budget: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub lambda_hat: f64,
    pub lambda_fitted: bool,
    pub samples: usize,
    pub buckets: Vec<Bucket>,
    /// Least-squares slope of bucket maxima against bucket midpoints.
    pub trend_slope: f64,
    /// Least-squares slope of every residual against its separation.
    pub residual_slope: f64,
    pub max_residual: f64,
    pub residual_budget: f64,
    pub verdict: Verdict,
}

/// Evaluated sample: `(separation, d₁, d₂)`.
pub type Triple = (f64, f64, f64);

/// Median of `d₁/d₂` over the top quartile of samples by `d₂`, taking at
/// least `min_count` samples. Pairs with `d₂ = 0` are skipped.
pub fn fit_lambda(values: &[(f64, f64)], min_count: usize) -> Result<f64, SimilarityError<std::convert::Infallible>> {
    let mut usable: Vec<(f64, f64)> = values.iter().copied().filter(|&(_, d2)| d2 > 0.0).collect();
    if usable.len() < min_count.max(1) {
        return Err(SimilarityError::TooFewSamples { needed: min_count.max(1), got: usable.len() });
    }
    usable.sort_by(|a, b| b.1.total_cmp(&a.1));
    let take = usable.len().div_ceil(4).max(min_count).max(1).min(usable.len());
    let mut ratios: Vec<f64> = usable[..take].iter().map(|&(d1, d2)| d1 / d2).collect();
    Ok(median(&mut ratios))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Least-squares slope of `y` on `x`; zero for fewer than two distinct `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

/// Builds a report from evaluated samples.
pub fn report_from_values(values: &[Triple], config: &CompareConfig) -> SimilarityReport {
    let pairs: Vec<(f64, f64)> = values.iter().map(|&(_, d1, d2)| (d1, d2)).collect();
    let (lambda_hat, lambda_fitted) = match config.lambda {
        LambdaMode::Fixed(l) => (l, true),
        LambdaMode::Fit => match fit_lambda(&pairs, config.min_count) {
            Ok(l) => (l, true),
            Err(_) => {
                let mut all: Vec<f64> = pairs.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).collect();
                (if all.is_empty() { 1.0 } else { median(&mut all) }, false)
            }
        },
    };
    let residuals: Vec<(f64, f64)> = values
        .iter()
        .map(|&(sep, d1, d2)| (sep, (d1 - lambda_hat * d2).abs()))
        .collect();

    let buckets = bucketize(&residuals, config.buckets.max(1));
    let maxima: Vec<(f64, f64)> = buckets
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (0.5 * (b.lo + b.hi), b.max_residual))
        .collect();
    let trend_slope = ls_slope(&maxima);
    let residual_slope = ls_slope(&residuals);
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let residual_budget = config.coarse_budget + config.discretization_budget;
    let monotone = maxima.windows(2).all(|w| w[1].1 >= w[0].1);

    let verdict = if !lambda_fitted || maxima.len() < 2 {
        Verdict::Inconclusive
    } else if trend_slope <= config.flat_slope && max_residual <= residual_budget {
        if (lambda_hat - 1.0).abs() <= config.isometry_tolerance {
            Verdict::RoughIsometry
        } else {
            Verdict::RoughSimilarity
        }
    } else if trend_slope >= config.trending_slope && monotone {
        Verdict::NotRoughlySimilar
    } else {
        Verdict::Inconclusive
    };

    SimilarityReport {
        lambda_hat,
        lambda_fitted,
        samples: values.len(),
        buckets,
        trend_slope,
        residual_slope,
        max_residual,
        residual_budget,
        verdict,
    }
}

fn bucketize(residuals: &[(f64, f64)], count: usize) -> Vec<Bucket> {
    if residuals.is_empty() {
        return Vec::new();
    }
    let lo = residuals.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = residuals.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / count as f64;
    let mut buckets: Vec<Bucket> = (0..count)
        .map(|i| Bucket {
            lo: lo + width * i as f64,
            hi: if i + 1 == count { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
            max_residual: 0.0,
            mean_residual: 0.0,
        })
        .collect();
    for &(sep, r) in residuals {
        let i = if width > 0.0 { (((sep - lo) / width) as usize).min(count - 1) } else { 0 };
        let b = &mut buckets[i];
        b.count += 1;
        b.max_residual = b.max_residual.max(r);
        b.mean_residual += r;
    }
    for b in &mut buckets {
        if b.count > 0 {
            b.mean_residual /= b.count as f64;
        }
    }
    buckets
}

/// Evaluates both distances on every sample and builds a report.
pub fn compare<P, E, F1, F2>(
    samples: &[Sample<P>],
    e1: F1,
    e2: F2,
    config: &CompareConfig,
) -> Result<SimilarityReport, SimilarityError<E>>
where
    P: Sync,
    E: Send,
    F1: Fn(&P, &P) -> Result<f64, E> + Sync + Send,
    F2: Fn(&P, &P) -> Result<f64, E> + Sync + Send,
{
    let values = evaluate(samples, e1, e2)?;
    Ok(report_from_values(&values, config))
}

/// Evaluates both distances on every sample, in sample order.
pub fn evaluate<P, E, F1, F2>(samples: &[Sample<P>], e1: F1, e2: F2) -> Result<Vec<Triple>, SimilarityError<E>>
where
    P: Sync,
    E: Send,
    F1: Fn(&P, &P) -> Result<f64, E> + Sync + Send,
    F2: Fn(&P, &P) -> Result<f64, E> + Sync + Send,
{
    par::try_map(samples, |_, s| Ok((s.separation, e1(&s.p, &s.q)?, e2(&s.p, &s.q)?)))
        .map_err(|(index, source)| SimilarityError::Evaluator { index, source })
}

/// Coarse separation of a pair: `ρ̃` for Sol-type models, `ρ̃₁` for Heintze.
pub fn separation(model: &Model, p: &GroupPoint, q: &GroupPoint) -> f64 {
    match model {
        Model::Heintze(m) => rho_tilde_1(m.eigenvalues(), (&p.n1, p.height), (&q.n1, q.height)),
        Model::SolType(_) => rho_tilde(model, p, q),
    }
}

/// Seeded random pairs with coarse separation log-uniform in
/// `[floor, separation_scale]`, where `floor` is the least attainable value
/// (1 for Heintze models, 2 for Sol-type).
///
/// Each pair is `q = p·g` with `p` near the identity. The target separation is
/// split between the height difference and the excursions to the critical
/// heights, and `g` is built so the coarse formula hits the target.
pub fn sample_pairs(model: &Model, count: usize, seed: u64, separation_scale: f64) -> Vec<Sample<GroupPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = match model {
        Model::Heintze(_) => 1.0,
        Model::SolType(_) => 2.0,
    };
    let top = separation_scale.max(floor);
    let up = model.up_eigenvalues().to_vec();
    let down = model.down_rates();
    (0..count)
        .map(|_| {
            let target = floor * (top / floor).powf(rng.random::<f64>());
            let budget = target - floor;
            let dh_share: f64 = rng.random::<f64>() * 0.6;
            let s = budget * dh_share * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let rest = budget - s.abs();
            let up_share = if down.is_empty() { 1.0 } else { rng.random::<f64>() };
            let t1 = s.max(0.0) + 0.5 * rest * up_share;
            let t2 = s.min(0.0) - 0.5 * rest * (1.0 - up_share);

            let n1 = horocyclic_offset(&mut rng, &up, t1);
            let n2: Vec<f64> = horocyclic_offset(&mut rng, &down.iter().map(|r| -r).collect::<Vec<_>>(), t2);
            let g = GroupPoint { n1, n2, height: s };
            let p = GroupPoint {
                n1: (0..up.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                n2: (0..down.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                height: rng.random_range(-1.0..1.0),
            };
            let q = model.multiply(&p, &g).expect("sampled points match the model");
            let separation = separation(model, &p, &q);
            Sample { p, q, separation }
        })
        .collect()
}

/// Random nilradical vector whose horocyclic length at height `t` is one,
/// for rates `r` (length `√Σ e^{−2 r_i t} v_i²`).
fn horocyclic_offset(rng: &mut ChaCha8Rng, rates: &[f64], t: f64) -> Vec<f64> {
    if rates.is_empty() {
        return Vec::new();
    }
    let dir: Vec<f64> = rates
        .iter()
        .map(|_| {
            let x: f64 = rng.random_range(0.2..1.0);
            if rng.random::<bool>() { x } else { -x }
        })
        .collect();
    // scale in log space to avoid overflow at large heights
    let logs: Vec<f64> = rates.iter().zip(&dir).map(|(r, d)| d.abs().ln() - r * t).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = m + 0.5 * logs.iter().map(|l| (2.0 * (l - m)).exp()).sum::<f64>().ln();
    dir.iter().map(|d| d * (-log_norm).exp()).collect()
}
