//! Sampled comparisons of left-invariant distances.
//!
//! - [`heintze_metric_experiment`], [`soltype_metric_experiment`]: two frame metrics on
//!   one group, compared through the identity map.
//! - [`coarse_formula_experiment`]: lattice distance against the closed-form
//!   coarse distance on a Sol-type group.
//!
//! Discretization error is estimated by grid halving: on control pairs,
//! `2(d_h − d_{h/2})` approximates the error of `d_h` to first order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{report_from_values, sample_pairs, CompareConfig, LambdaMode, Sample, SimilarityReport, Triple};
use crate::coarse::{rho_closed_form, CoarseError};
use crate::model::{FrameMetric, GroupPoint, HeintzeModel, Model, ModelError, SolTypeModel};
use crate::numeric::{lattice_distance, shooting_refine, DistanceEstimate, GridSpec, NumericError, ShootingOptions};
use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("distance evaluation failed on sample {index}: {source}")]
    Numeric { index: usize, source: NumericError },
    #[error("coarse formula failed on sample {index}: {source}")]
    Coarse { index: usize, source: CoarseError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub samples: usize,
    pub seed: u64,
    pub separation_scale: f64,
    pub grid: GridSpec,
    /// Polish lattice distances with the shooting refiner.
    pub refine: bool,
    /// Rescale both metrics so the vertical geodesics have unit speed.
    pub normalize: bool,
    pub control_pairs: usize,
    pub compare: CompareConfig,
}

impl ExperimentConfig {
    pub fn new(model: &Model, samples: usize, seed: u64, separation_scale: f64) -> Self {
        Self {
            samples,
            seed,
            separation_scale,
            grid: GridSpec::default_for(model),
            refine: true,
            normalize: true,
            control_pairs: 20,
            compare: CompareConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub control_pairs: usize,
    /// Per-unit-length first-order error estimates over the control pairs.
    pub median_rate: f64,
    pub max_rate: f64,
    /// Allowance added to the residual budget.
    pub budget: f64,
}

impl Discretization {
    fn none() -> Self {
        Self { control_pairs: 0, median_rate: 0.0, max_rate: 0.0, budget: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub p: GroupPoint,
    pub q: GroupPoint,
    pub separation: f64,
    pub d1: f64,
    pub d2: f64,
    /// Whether each value is the length of a converged geodesic.
    pub refined: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    /// Metrics as used, after optional normalization: `d₁` uses the first.
    pub metrics: [Vec<Vec<f64>>; 2],
    pub discretization: Discretization,
    pub rows: Vec<SampleRow>,
    pub report: SimilarityReport,
}

impl ExperimentReport {
    /// One CSV row per bucket.
    pub fn buckets_csv(&self) -> String {
        let mut out = String::from("lo,hi,count,max_residual,mean_residual\n");
        for b in &self.report.buckets {
            out.push_str(&format!("{},{},{},{},{}\n", b.lo, b.hi, b.count, b.max_residual, b.mean_residual));
        }
        out
    }
}

/// Two frame metrics on a Heintze group, compared through the identity. Reports
/// `d₁ = d_{Q₂}` against `d₂ = d_{Q₁}`, so `λ̂` estimates `d_{Q₂}/d_{Q₁}`.
pub fn heintze_metric_experiment(
    model: &HeintzeModel,
    q1: &FrameMetric,
    q2: &FrameMetric,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    metric_experiment(&Model::Heintze(model.clone()), q1, q2, config)
}

/// Two frame metrics on a Sol-type group, oriented as in
/// [`heintze_metric_experiment`].
pub fn soltype_metric_experiment(
    model: &SolTypeModel,
    q1: &FrameMetric,
    q2: &FrameMetric,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    metric_experiment(&Model::SolType(model.clone()), q1, q2, config)
}

fn estimate(model: &Model, metric: &FrameMetric, p: &GroupPoint, q: &GroupPoint, config: &ExperimentConfig) -> Result<DistanceEstimate, NumericError> {
    let est = lattice_distance(model, metric, p, q, &config.grid)?;
    if config.refine {
        shooting_refine(model, metric, p, q, &est, &ShootingOptions::default())
    } else {
        Ok(est)
    }
}

fn metric_experiment(
    model: &Model,
    q1: &FrameMetric,
    q2: &FrameMetric,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    let (m1, m2) = if config.normalize {
        (model.normalize_metric(q1)?, model.normalize_metric(q2)?)
    } else {
        (q1.clone(), q2.clone())
    };
    let samples = sample_pairs(model, config.samples, config.seed, config.separation_scale);
    let results = par::try_map(&samples, |_, s| {
        Ok::<_, NumericError>((estimate(model, &m2, &s.p, &s.q, config)?, estimate(model, &m1, &s.p, &s.q, config)?))
    })
    .map_err(|(index, source)| ExperimentError::Numeric { index, source })?;

    // samples whose values still carry lattice error
    let coarse: Vec<usize> = (0..samples.len())
        .filter(|&i| !(results[i].0.refined && results[i].1.refined))
        .collect();
    let discretization = if coarse.is_empty() {
        Discretization::none()
    } else {
        let controls = spread(&coarse, &samples, config.control_pairs);
        let rates = halving_rates(model, &[&m2, &m1], &samples, &controls, &config.grid)?;
        let reach = coarse.iter().map(|&i| results[i].0.value + results[i].1.value).fold(0.0, f64::max);
        summarize(rates, reach, controls.len())
    };

    let triples: Vec<Triple> = samples
        .iter()
        .zip(&results)
        .map(|(s, (a, b))| (s.separation, a.value, b.value))
        .collect();
    let mut compare = config.compare.clone();
    compare.discretization_budget += discretization.budget;
    let report = report_from_values(&triples, &compare);
    let rows = samples
        .into_iter()
        .zip(results)
        .map(|(s, (a, b))| SampleRow {
            p: s.p,
            q: s.q,
            separation: s.separation,
            d1: a.value,
            d2: b.value,
            refined: [a.refined, b.refined],
        })
        .collect();
    Ok(ExperimentReport { seed: config.seed, metrics: [m2.rows(), m1.rows()], discretization, rows, report })
}

/// Lattice distance against the closed-form coarse distance `ρ` on a
/// Sol-type group with one-dimensional factors and a diagonal metric.
///
/// Lattice values are corrected by the median grid-halving error rate over
/// the control pairs; residuals `|d − ρ|` are bucketed by `ρ̃`.
pub fn coarse_formula_experiment(
    model: &SolTypeModel,
    metric: &FrameMetric,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    let model = Model::SolType(model.clone());
    let metric = if config.normalize { model.normalize_metric(metric)? } else { metric.clone() };
    let samples = sample_pairs(&model, config.samples, config.seed, config.separation_scale);
    let rho: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(index, s)| rho_closed_form(&model, &metric, &s.p, &s.q).map_err(|source| ExperimentError::Coarse { index, source }))
        .collect::<Result<_, _>>()?;
    let results = par::try_map(&samples, |_, s| estimate(&model, &metric, &s.p, &s.q, config))
        .map_err(|(index, source)| ExperimentError::Numeric { index, source })?;

    let coarse: Vec<usize> = (0..samples.len()).filter(|&i| !results[i].refined).collect();
    let discretization = if coarse.is_empty() {
        Discretization::none()
    } else {
        let controls = spread(&coarse, &samples, config.control_pairs);
        let rates = halving_rates(&model, &[&metric], &samples, &controls, &config.grid)?;
        let reach = coarse.iter().map(|&i| results[i].value).fold(0.0, f64::max);
        summarize(rates, reach, controls.len())
    };
    let corrected: Vec<f64> = results
        .iter()
        .map(|r| if r.refined { r.value } else { r.value * (1.0 - discretization.median_rate) })
        .collect();

    let triples: Vec<Triple> = samples.iter().zip(&corrected).zip(&rho).map(|((s, d), r)| (s.separation, *d, *r)).collect();
    let mut compare = config.compare.clone();
    compare.lambda = LambdaMode::Fixed(1.0);
    compare.discretization_budget += discretization.budget;
    let report = report_from_values(&triples, &compare);
    let rows = samples
        .into_iter()
        .zip(corrected.iter().zip(&rho).zip(&results))
        .map(|(s, ((d, r), est))| SampleRow {
            p: s.p,
            q: s.q,
            separation: s.separation,
            d1: *d,
            d2: *r,
            refined: [est.refined, true],
        })
        .collect();
    let identity = FrameMetric::identity(model.dim()).rows();
    Ok(ExperimentReport { seed: config.seed, metrics: [metric.rows(), identity], discretization, rows, report })
}

/// Up to `count` of `candidates`, evenly spread by separation.
fn spread<P>(candidates: &[usize], samples: &[Sample<P>], count: usize) -> Vec<usize> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|&a, &b| samples[a].separation.total_cmp(&samples[b].separation).then(a.cmp(&b)));
    if sorted.len() <= count {
        return sorted;
    }
    if count == 0 {
        return Vec::new();
    }
    let step = (sorted.len() - 1) as f64 / (count.max(2) - 1) as f64;
    let mut out: Vec<usize> = (0..count).map(|j| sorted[(j as f64 * step).round() as usize]).collect();
    out.dedup();
    out
}

/// `2|d_h − d_{h/2}| / d_h` for every control pair and metric.
fn halving_rates(
    model: &Model,
    metrics: &[&FrameMetric],
    samples: &[Sample<GroupPoint>],
    controls: &[usize],
    grid: &GridSpec,
) -> Result<Vec<f64>, ExperimentError> {
    let fine = grid.with_h(grid.h / 2.0);
    let jobs: Vec<(usize, usize)> = controls.iter().flat_map(|&i| (0..metrics.len()).map(move |m| (i, m))).collect();
    par::try_map(&jobs, |_, &(i, m)| {
        let s = &samples[i];
        let coarse = lattice_distance(model, metrics[m], &s.p, &s.q, grid).map_err(|e| (i, e))?;
        let fine = lattice_distance(model, metrics[m], &s.p, &s.q, &fine).map_err(|e| (i, e))?;
        Ok(if coarse.value > 0.0 { 2.0 * (coarse.value - fine.value).abs() / coarse.value } else { 0.0 })
    })
    .map_err(|(_, (index, source))| ExperimentError::Numeric { index, source })
}

fn summarize(mut rates: Vec<f64>, reach: f64, controls: usize) -> Discretization {
    if rates.is_empty() {
        return Discretization::none();
    }
    rates.sort_by(f64::total_cmp);
    let n = rates.len();
    let median_rate = if n % 2 == 1 { rates[n / 2] } else { 0.5 * (rates[n / 2 - 1] + rates[n / 2]) };
    let max_rate = rates[n - 1];
    Discretization { control_pairs: controls, median_rate, max_rate, budget: max_rate * reach }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::Verdict;

    fn quick(model: &Model, samples: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(model, samples, 7, 6.0);
        c.compare.min_count = 4;
        c
    }

    #[test]
    fn identical_metrics_agree_exactly() {
        let m = HeintzeModel::hyperbolic_plane();
        let q = FrameMetric::identity(2);
        let r = heintze_metric_experiment(&m, &q, &q, &quick(&Model::Heintze(m.clone()), 12)).unwrap();
        assert_eq!(r.report.max_residual, 0.0);
        assert_eq!(r.report.lambda_hat, 1.0);
        assert_eq!(r.report.verdict, Verdict::RoughIsometry);
    }

    #[test]
    fn unnormalized_scaling_shows_in_lambda() {
        let m = HeintzeModel::hyperbolic_plane();
        let q = FrameMetric::identity(2);
        let q4 = q.scaled(4.0).unwrap();
        let mut c = quick(&Model::Heintze(m.clone()), 12);
        c.normalize = false;
        let r = heintze_metric_experiment(&m, &q, &q4, &c).unwrap();
        assert!((r.report.lambda_hat - 2.0).abs() < 1e-6, "{}", r.report.lambda_hat);
        assert_eq!(r.report.verdict, Verdict::RoughSimilarity);
    }

    #[test]
    fn spread_picks_extremes() {
        let samples: Vec<Sample<()>> = (0..10).map(|i| Sample { p: (), q: (), separation: i as f64 }).collect();
        let all: Vec<usize> = (0..10).collect();
        assert_eq!(spread(&all, &samples, 3), vec![0, 5, 9]);
        assert_eq!(spread(&all[..2], &samples, 3), vec![0, 1]);
    }
}
