use std::fs;

use anyhow::{bail, Context, Result};
use coarselab::coarse::{coarse_path, rho_closed_form, rho_tilde};
use coarselab::lamplighter::{non_similarity_certificate, word_length_table, TableMethod};
use coarselab::numeric::{
    horoball_experiment, lattice_distance, path_csv, path_height_extremes, shooting_refine, GridSpec, ShootingOptions,
};
use coarselab::similarity::{
    coarse_formula_experiment, heintze_metric_experiment, soltype_metric_experiment, ExperimentConfig, ExperimentReport,
    Verdict,
};
use coarselab::{FrameMetric, GroupPoint, Model, ModelSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{Cli, Command, Format};

pub struct Outcome {
    pub text: String,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, passed: true, summary: String::new() }
    }
}

const DEFAULT_DIST: &str = include_str!("../configs/dist.json");
const DEFAULT_RHO: &str = include_str!("../configs/rho.json");
const DEFAULT_COARSE_PATH: &str = include_str!("../configs/coarse-path.json");
const DEFAULT_VERIFY_SOL: &str = include_str!("../configs/verify-sol.json");
const DEFAULT_VERIFY_HEINTZE: &str = include_str!("../configs/verify-heintze.json");
const DEFAULT_VERIFY_SOLTYPE: &str = include_str!("../configs/verify-soltype.json");
const DEFAULT_LAMPLIGHTER: &str = include_str!("../configs/lamplighter.json");
const DEFAULT_HOROBALL: &str = include_str!("../configs/horoball-lemma.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairConfig {
    model: ModelSpec,
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(default)]
    grid_h: Option<f64>,
    #[serde(default)]
    refine: bool,
    #[serde(default)]
    include_path: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyConfig {
    model: ModelSpec,
    /// Second frame metric; the first comes from the model spec.
    #[serde(default)]
    compare_metric: Option<Vec<Vec<f64>>>,
    samples: usize,
    seed: u64,
    separation_scale: f64,
    #[serde(default)]
    grid_h: Option<f64>,
    #[serde(default = "yes")]
    refine: bool,
    #[serde(default = "yes")]
    normalize: bool,
    #[serde(default = "twenty")]
    control_pairs: usize,
    #[serde(default)]
    min_count: Option<usize>,
    #[serde(default)]
    expect: Option<Verdict>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LamplighterConfig {
    m: u32,
    n_max: u32,
    #[serde(default = "bidirectional")]
    method: TableMethod,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoroballConfig {
    distances: Vec<f64>,
    #[serde(default = "surface")]
    depths: Vec<f64>,
    grid_h: f64,
    tolerance: f64,
}

fn yes() -> bool {
    true
}

fn twenty() -> usize {
    20
}

fn bidirectional() -> TableMethod {
    TableMethod::Bidirectional
}

fn surface() -> Vec<f64> {
    vec![0.0]
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match cli.command {
        Command::Dist => dist(cli),
        Command::Rho => rho(cli),
        Command::CoarsePath => path(cli),
        Command::VerifySol | Command::VerifyHeintze | Command::VerifySoltype => verify(cli),
        Command::LamplighterTable => lamplighter_table(cli),
        Command::LamplighterCertificate => lamplighter_certificate(cli),
        Command::HoroballLemma => horoball(cli),
    }
}

pub fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load<T: DeserializeOwned>(cli: &Cli, default: &str) -> Result<T> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => default.to_string(),
    };
    serde_json::from_str(&text).context("malformed config")
}

/// Rejects flags that do not apply to the command.
fn reject(cli: &Cli, grid_h: bool, samples: bool, seed: bool, n_max: bool) -> Result<()> {
    let flags = [
        (cli.grid_h.is_some() && !grid_h, "--grid-h"),
        (cli.samples.is_some() && !samples, "--samples"),
        (cli.seed.is_some() && !seed, "--seed"),
        (cli.n_max.is_some() && !n_max, "--n-max"),
    ];
    if let Some((_, name)) = flags.iter().find(|f| f.0) {
        bail!("{name} does not apply to this command");
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn points(model: &Model, cfg: &PairConfig) -> Result<(GroupPoint, GroupPoint)> {
    Ok((model.point_from_coords(&cfg.p)?, model.point_from_coords(&cfg.q)?))
}

fn dist(cli: &Cli) -> Result<Outcome> {
    reject(cli, true, false, false, false)?;
    let mut cfg: PairConfig = load(cli, DEFAULT_DIST)?;
    if cli.grid_h.is_some() {
        cfg.grid_h = cli.grid_h;
    }
    let model = cfg.model.model()?;
    let metric = cfg.model.metric()?;
    let (p, q) = points(&model, &cfg)?;
    let grid = match cfg.grid_h {
        Some(h) => GridSpec::default_for(&model).with_h(h),
        None => GridSpec::default_for(&model),
    };
    cfg.grid_h = Some(grid.h);
    let mut est = lattice_distance(&model, &metric, &p, &q, &grid)?;
    let lattice_value = est.value;
    if cfg.refine {
        est = shooting_refine(&model, &metric, &p, &q, &est, &ShootingOptions::default())?;
    }
    let path = est.path.take().unwrap_or_default();
    let text = match cli.format {
        Format::Csv => path_csv(&model, &metric, &path),
        Format::Json => to_json(&json!({
            "command": "dist",
            "config": cfg,
            "value": est.value,
            "lattice_value": lattice_value,
            "upper_bound": est.upper_bound,
            "refined": est.refined,
            "warning": est.warning,
            "nodes": est.nodes,
            "path": if cfg.include_path { Some(&path) } else { None },
        }))?,
    };
    Ok(Outcome::ok(text))
}

fn rho(cli: &Cli) -> Result<Outcome> {
    reject(cli, false, false, false, false)?;
    let cfg: PairConfig = load(cli, DEFAULT_RHO)?;
    let model = cfg.model.model()?;
    let metric = cfg.model.metric()?;
    let (p, q) = points(&model, &cfg)?;
    let tilde = rho_tilde(&model, &p, &q);
    let closed = rho_closed_form(&model, &metric, &p, &q);
    let text = match cli.format {
        Format::Csv => format!(
            "rho_tilde,rho\n{},{}\n",
            tilde,
            closed.as_ref().map(|v| v.to_string()).unwrap_or_default()
        ),
        Format::Json => to_json(&json!({
            "command": "rho",
            "config": cfg,
            "rho_tilde": tilde,
            "rho": closed.as_ref().ok(),
            "rho_unavailable": closed.as_ref().err().map(|e| e.to_string()),
        }))?,
    };
    Ok(Outcome::ok(text))
}

fn path(cli: &Cli) -> Result<Outcome> {
    reject(cli, false, false, false, false)?;
    let cfg: PairConfig = load(cli, DEFAULT_COARSE_PATH)?;
    let model = cfg.model.model()?;
    let metric = cfg.model.metric()?;
    let (p, q) = points(&model, &cfg)?;
    let path = coarse_path(&model, &metric, &p, &q)?;
    let (lo, hi) = path_height_extremes(&path.waypoints)?;
    let normalized = model.normalize_metric(&metric)?;
    let text = match cli.format {
        Format::Csv => path_csv(&model, &normalized, &path.waypoints),
        Format::Json => to_json(&json!({
            "command": "coarse-path",
            "config": cfg,
            "length": path.length,
            "rho_tilde": rho_tilde(&model, &p, &q),
            "height_extremes": [lo, hi],
            "waypoints": path.waypoints,
        }))?,
    };
    Ok(Outcome::ok(text))
}

fn verify(cli: &Cli) -> Result<Outcome> {
    reject(cli, true, true, true, false)?;
    let (name, default) = match cli.command {
        Command::VerifySol => ("verify-sol", DEFAULT_VERIFY_SOL),
        Command::VerifyHeintze => ("verify-heintze", DEFAULT_VERIFY_HEINTZE),
        _ => ("verify-soltype", DEFAULT_VERIFY_SOLTYPE),
    };
    let mut cfg: VerifyConfig = load(cli, default)?;
    if let Some(h) = cli.grid_h {
        cfg.grid_h = Some(h);
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let model = cfg.model.model()?;
    let q1 = cfg.model.metric()?;
    let mut exp = ExperimentConfig::new(&model, cfg.samples, cfg.seed, cfg.separation_scale);
    if let Some(h) = cfg.grid_h {
        exp.grid = exp.grid.with_h(h);
    }
    cfg.grid_h = Some(exp.grid.h);
    exp.refine = cfg.refine;
    exp.normalize = cfg.normalize;
    exp.control_pairs = cfg.control_pairs;
    if let Some(n) = cfg.min_count {
        exp.compare.min_count = n;
    }

    let report: ExperimentReport = match (cli.command, &model) {
        (Command::VerifySol, Model::SolType(m)) => {
            if cfg.compare_metric.is_some() {
                bail!("verify-sol takes a single frame metric");
            }
            coarse_formula_experiment(m, &q1, &exp)?
        }
        (Command::VerifyHeintze, Model::Heintze(m)) => heintze_metric_experiment(m, &q1, &second(&cfg, &model)?, &exp)?,
        (Command::VerifySoltype, Model::SolType(m)) => soltype_metric_experiment(m, &q1, &second(&cfg, &model)?, &exp)?,
        _ => bail!("{name} does not accept this model type"),
    };

    let verdict = report.report.verdict;
    let passed = cfg.expect.is_none_or(|v| v == verdict);
    let summary = format!("verdict {verdict:?}, expected {:?}", cfg.expect);
    let text = match cli.format {
        Format::Csv => report.buckets_csv(),
        Format::Json => to_json(&json!({ "command": name, "config": cfg, "passed": passed, "report": report }))?,
    };
    Ok(Outcome { text, passed, summary })
}

fn second(cfg: &VerifyConfig, model: &Model) -> Result<FrameMetric> {
    let rows = cfg.compare_metric.as_ref().context("config needs compare_metric")?;
    let q = FrameMetric::from_rows(rows)?;
    if q.dim() != model.dim() {
        bail!("compare_metric is {}x{}, model has dimension {}", q.dim(), q.dim(), model.dim());
    }
    Ok(q)
}

fn lamplighter_config(cli: &Cli) -> Result<LamplighterConfig> {
    reject(cli, false, false, false, true)?;
    let mut cfg: LamplighterConfig = load(cli, DEFAULT_LAMPLIGHTER)?;
    if let Some(n) = cli.n_max {
        cfg.n_max = n;
    }
    Ok(cfg)
}

fn lamplighter_table(cli: &Cli) -> Result<Outcome> {
    let cfg = lamplighter_config(cli)?;
    let rows = word_length_table(cfg.m, cfg.n_max, cfg.method)?;
    let bad: Vec<u32> = rows.iter().filter(|r| !r.matches_closed_form()).map(|r| r.n).collect();
    let text = match cli.format {
        Format::Csv => {
            let mut out = String::from("n,wreath_conjugate,automaton_conjugate,wreath_power,automaton_power\n");
            for r in &rows {
                let [a, b, c, d] = r.values();
                out.push_str(&format!("{},{a},{b},{c},{d}\n", r.n));
            }
            out
        }
        Format::Json => to_json(&json!({ "command": "lamplighter-table", "config": cfg, "rows": rows, "mismatched": bad }))?,
    };
    Ok(Outcome { text, passed: bad.is_empty(), summary: format!("rows {bad:?} differ from the closed forms") })
}

fn lamplighter_certificate(cli: &Cli) -> Result<Outcome> {
    let cfg = lamplighter_config(cli)?;
    let cert = non_similarity_certificate(cfg.m, cfg.n_max)?;
    let text = match cli.format {
        Format::Csv => {
            let mut out = String::from("n,conjugate_ratio,power_ratio\n");
            for r in &cert.rows {
                out.push_str(&format!("{},{},{}\n", r.n, r.conjugate_ratio, r.power_ratio));
            }
            out
        }
        Format::Json => to_json(&json!({ "command": "lamplighter-certificate", "config": cfg, "certificate": cert }))?,
    };
    Ok(Outcome { text, passed: cert.valid, summary: format!("certificate invalid, gap {}", cert.gap) })
}

fn horoball(cli: &Cli) -> Result<Outcome> {
    reject(cli, true, false, false, false)?;
    let mut cfg: HoroballConfig = load(cli, DEFAULT_HOROBALL)?;
    if let Some(h) = cli.grid_h {
        cfg.grid_h = h;
    }
    let rows = horoball_experiment(&cfg.distances, &cfg.depths, cfg.grid_h)?;
    let failed: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| {
            if r.depth == 0.0 {
                !r.exceeds_exponential() || r.relative_error > cfg.tolerance
            } else {
                !r.exceeds_excursion_bound()
            }
        })
        .map(|r| (r.d, r.depth))
        .collect();
    let text = match cli.format {
        Format::Csv => {
            let mut out = String::from(
                "d,depth,horocycle_length,constrained_length,height_change,exponential_bound,excursion_bound,relative_error\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.d, r.depth, r.horocycle_length, r.constrained_length, r.height_change, r.exponential_bound,
                    r.excursion_bound, r.relative_error
                ));
            }
            out
        }
        Format::Json => to_json(&json!({ "command": "horoball-lemma", "config": cfg, "rows": rows, "failed": failed }))?,
    };
    Ok(Outcome { text, passed: failed.is_empty(), summary: format!("rows (d, depth) {failed:?} failed") })
}
