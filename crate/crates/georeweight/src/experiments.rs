//! Experiment harness: declarative configs, a seeded parallel trial
//! engine, and CSV-serializable result rows for the convergence, strata,
//! batching and statistical-verification studies.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    estimate_batched, CoefficientMode, EstimatorError, EstimatorKind, Integrand,
};
use crate::geometry::{self, GeometryError};
use crate::sampling::{self, SamplingError, Seed};
use crate::testbed;

/// 17-significant-digit decimal rendering; lossless f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("image error: {0}")]
    Image(#[from] testbed::PgmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    StrataSweep,
    BatchFixedTotal,
    BatchGrowth,
    BiasCheck,
    Orderstats,
    BoundaryCardinality,
}

impl ExperimentKind {
    pub const ALL_NAMES: &'static [&'static str] = &[
        "convergence",
        "strata_sweep",
        "batch_fixed_total",
        "batch_growth",
        "bias_check",
        "orderstats",
        "boundary_cardinality",
    ];
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::StrataSweep => "strata_sweep",
            ExperimentKind::BatchFixedTotal => "batch_fixed_total",
            ExperimentKind::BatchGrowth => "batch_growth",
            ExperimentKind::BiasCheck => "bias_check",
            ExperimentKind::Orderstats => "orderstats",
            ExperimentKind::BoundaryCardinality => "boundary_cardinality",
        };
        write!(f, "{s}")
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "convergence" => ExperimentKind::Convergence,
            "strata_sweep" => ExperimentKind::StrataSweep,
            "batch_fixed_total" => ExperimentKind::BatchFixedTotal,
            "batch_growth" => ExperimentKind::BatchGrowth,
            "bias_check" => ExperimentKind::BiasCheck,
            "orderstats" => ExperimentKind::Orderstats,
            "boundary_cardinality" => ExperimentKind::BoundaryCardinality,
            other => return Err(format!("unknown experiment {other:?}")),
        })
    }
}

pub fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    Ok(match s {
        "mc" => EstimatorKind::StandardMC,
        "con" => EstimatorKind::Consistent,
        "gr" => EstimatorKind::UnbiasedUniform,
        "strat" => EstimatorKind::StratifiedMC,
        "gr-strat" => EstimatorKind::UnbiasedStratified,
        other => return Err(format!("unknown estimator {other:?}")),
    })
}

pub fn parse_mode(s: &str) -> Result<CoefficientMode, String> {
    Ok(match s {
        "grid" => CoefficientMode::GridConsistent,
        "paper" => CoefficientMode::PaperLiteral,
        other => return Err(format!("unknown coefficient mode {other:?}")),
    })
}

/// Declarative experiment description. Empty lists take per-experiment
/// defaults when the run starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_integrand")]
    pub integrand: String,
    #[serde(default)]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub strata: Vec<usize>,
    #[serde(default)]
    pub batch_size: Vec<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: CoefficientMode,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_integrand() -> String {
    "test1d".to_string()
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            integrand: default_integrand(),
            estimators: Vec::new(),
            n: Vec::new(),
            strata: Vec::new(),
            batch_size: Vec::new(),
            trials: None,
            seed: 0,
            mode: CoefficientMode::GridConsistent,
            out: None,
        }
    }
}

/// One CSV record; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub estimator: String,
    pub mode: String,
    pub n: usize,
    pub s: usize,
    pub batch_size: usize,
    pub n_batches: usize,
    pub trials: usize,
    pub mean: f64,
    pub mse: f64,
    pub variance: f64,
    pub bias: f64,
    pub se: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "experiment,estimator,mode,N,S,batch_size,n_batches,trials,mean,mse,variance,bias,se,seed";

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.estimator,
            r.mode,
            r.n,
            r.s,
            r.batch_size,
            r.n_batches,
            r.trials,
            fmt_f64(r.mean),
            fmt_f64(r.mse),
            fmt_f64(r.variance),
            fmt_f64(r.bias),
            fmt_f64(r.se),
            r.seed,
        );
    }
    out
}

/// Per-trial summary statistics against an optional reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub bias: f64,
    pub mse: f64,
}

pub fn summarize(values: &[f64], reference: Option<f64>) -> TrialStats {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
    let se = (variance / t).sqrt();
    let (bias, mse) = match reference {
        Some(r) => (
            mean - r,
            values.iter().map(|v| (v - r) * (v - r)).sum::<f64>() / t,
        ),
        None => (f64::NAN, f64::NAN),
    };
    TrialStats { mean, variance, se, bias, mse }
}

/// Run `trials` independent trials with per-trial derived seeds. Results
/// come back in trial-index order regardless of worker count.
pub fn run_trials<F, T>(trials: usize, base_seed: Seed, trial: F) -> Result<Vec<T>, ExperimentError>
where
    F: Fn(Seed) -> Result<T, ExperimentError> + Sync,
    T: Send,
{
    (0..trials)
        .into_par_iter()
        .map(|i| trial(sampling::derive_trial_seed(base_seed, i as u64)))
        .collect()
}

pub fn build_integrand(spec: &str) -> Result<Box<dyn Integrand>, ExperimentError> {
    if spec == "test1d" {
        Ok(Box::new(testbed::Piecewise1DFunction))
    } else if spec == "product2d" {
        Ok(Box::new(testbed::Synthetic2DFunction::Product))
    } else if let Some(path) = spec.strip_prefix("image:") {
        Ok(Box::new(testbed::load_pgm(std::path::Path::new(path))?))
    } else if let Some(c) = spec.strip_prefix("constant:") {
        let c: f64 = c
            .parse()
            .map_err(|e| ExperimentError::Config(format!("bad constant integrand: {e}")))?;
        Ok(Box::new(crate::estimators::FnIntegrand {
            dim: 1,
            func: move |_: &[f64]| c,
            reference: Some(c),
        }))
    } else {
        Err(ExperimentError::Config(format!("unknown integrand {spec:?}")))
    }
}

fn resolve_estimators(
    config: &ExperimentConfig,
    defaults: &[EstimatorKind],
) -> Result<Vec<EstimatorKind>, ExperimentError> {
    if config.estimators.is_empty() {
        return Ok(defaults.to_vec());
    }
    config
        .estimators
        .iter()
        .map(|s| parse_estimator(s).map_err(ExperimentError::Config))
        .collect()
}

/// Largest strata-per-axis dividing N near N^(1/(2D)), so strata and
/// per-stratum counts grow together; falls back to 1.
pub fn default_strata(n: usize, dim: usize) -> usize {
    let target = (n as f64).powf(1.0 / (2.0 * dim as f64)).round() as usize;
    (1..=target.max(1))
        .rev()
        .find(|s| n % s.pow(dim as u32) == 0)
        .unwrap_or(1)
}

fn strata_for(config: &ExperimentConfig, n: usize, dim: usize) -> Result<usize, ExperimentError> {
    if config.strata.is_empty() {
        return Ok(default_strata(n, dim));
    }
    if config.strata.len() == 1 {
        let s = config.strata[0];
        if n % s.pow(dim as u32) != 0 {
            return Err(ExperimentError::Config(format!(
                "N={n} not divisible by {s}^{dim} strata"
            )));
        }
        return Ok(s);
    }
    config
        .strata
        .iter()
        .copied()
        .filter(|s| n % s.pow(dim as u32) == 0)
        .max()
        .ok_or_else(|| {
            ExperimentError::Config(format!("no configured strata count divides N={n}"))
        })
}

fn mode_label(kind: EstimatorKind, mode: CoefficientMode) -> String {
    match kind {
        EstimatorKind::UnbiasedUniform | EstimatorKind::UnbiasedStratified => mode.to_string(),
        _ => "-".to_string(),
    }
}

fn require_reference(f: &dyn Integrand) -> Result<f64, ExperimentError> {
    f.reference_integral()
        .ok_or_else(|| ExperimentError::Config("integrand has no reference integral".into()))
}

#[allow(clippy::too_many_arguments)]
fn estimator_rows(
    experiment: ExperimentKind,
    f: &dyn Integrand,
    kinds: &[EstimatorKind],
    batch_plans: &[(usize, usize)], // (batch_size, n_batches)
    trials: usize,
    base_seed: u64,
    mode: CoefficientMode,
    config: &ExperimentConfig,
    reference: f64,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let dim = f.dimension();
    let mut rows = Vec::new();
    for &kind in kinds {
        for &(batch_size, n_batches) in batch_plans {
            let s = if kind.is_stratified() {
                strata_for(config, batch_size, dim)?
            } else {
                0
            };
            let values = run_trials(trials, Seed(base_seed), |trial_seed| {
                Ok(estimate_batched(kind, f, batch_size, n_batches, trial_seed, mode, s)?.value)
            })?;
            let stats = summarize(&values, Some(reference));
            rows.push(ResultRow {
                experiment: experiment.to_string(),
                estimator: kind.to_string(),
                mode: mode_label(kind, mode),
                n: batch_size * n_batches,
                s,
                batch_size,
                n_batches,
                trials,
                mean: stats.mean,
                mse: stats.mse,
                variance: stats.variance,
                bias: stats.bias,
                se: stats.se,
                seed: base_seed,
            });
        }
    }
    Ok(rows)
}

const ALL_FOUR: &[EstimatorKind] = &[
    EstimatorKind::StandardMC,
    EstimatorKind::UnbiasedUniform,
    EstimatorKind::StratifiedMC,
    EstimatorKind::UnbiasedStratified,
];

/// MSE vs N for each estimator: T independent trials per point.
pub fn run_convergence(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let reference = require_reference(f.as_ref())?;
    let kinds = resolve_estimators(config, ALL_FOUR)?;
    let ns = if config.n.is_empty() {
        vec![16, 64, 256, 1024, 4096]
    } else {
        config.n.clone()
    };
    let trials = config.trials.unwrap_or(1000);
    let plans: Vec<(usize, usize)> = ns.iter().map(|&n| (n, 1)).collect();
    estimator_rows(
        ExperimentKind::Convergence,
        f.as_ref(),
        &kinds,
        &plans,
        trials,
        config.seed,
        config.mode,
        config,
        reference,
    )
}

/// MSE vs strata count at fixed N; stratified estimators only.
pub fn run_strata_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let reference = require_reference(f.as_ref())?;
    let kinds = resolve_estimators(
        config,
        &[EstimatorKind::StratifiedMC, EstimatorKind::UnbiasedStratified],
    )?;
    if let Some(k) = kinds.iter().find(|k| !k.is_stratified()) {
        return Err(ExperimentError::Config(format!(
            "strata_sweep accepts stratified estimators only, got {k}"
        )));
    }
    let n = *config.n.first().unwrap_or(&1024);
    let strata = if config.strata.is_empty() {
        vec![1, 2, 4, 8, 16, 32]
    } else {
        config.strata.clone()
    };
    let trials = config.trials.unwrap_or(1000);
    let dim = f.dimension();
    let mut rows = Vec::new();
    for &s in &strata {
        if n % s.pow(dim as u32) != 0 {
            return Err(ExperimentError::Config(format!(
                "N={n} not divisible by {s}^{dim} strata"
            )));
        }
        let sub = ExperimentConfig { strata: vec![s], ..config.clone() };
        let mut r = estimator_rows(
            ExperimentKind::StrataSweep,
            f.as_ref(),
            &kinds,
            &[(n, 1)],
            trials,
            config.seed,
            config.mode,
            &sub,
            reference,
        )?;
        rows.append(&mut r);
    }
    Ok(rows)
}

/// Fixed total budget split into batches of varying size.
pub fn run_batch_fixed_total(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let reference = require_reference(f.as_ref())?;
    let kinds = resolve_estimators(config, ALL_FOUR)?;
    let total = *config.n.first().unwrap_or(&100_000);
    let batch_sizes = if config.batch_size.is_empty() {
        vec![100, 1000, 10_000]
    } else {
        config.batch_size.clone()
    };
    let trials = config.trials.unwrap_or(200);
    let mut plans = Vec::new();
    for &b in &batch_sizes {
        if total % b != 0 {
            return Err(ExperimentError::Config(format!(
                "total budget {total} not divisible by batch size {b}"
            )));
        }
        plans.push((b, total / b));
    }
    estimator_rows(
        ExperimentKind::BatchFixedTotal,
        f.as_ref(),
        &kinds,
        &plans,
        trials,
        config.seed,
        config.mode,
        config,
        reference,
    )
}

/// Fixed batch size, doubling batch counts until the sample budget cap.
pub fn run_batch_growth(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let reference = require_reference(f.as_ref())?;
    let kinds = resolve_estimators(config, ALL_FOUR)?;
    let batch_size = *config.batch_size.first().unwrap_or(&1000);
    let cap = *config.n.first().unwrap_or(&100_000);
    if batch_size > cap {
        return Err(ExperimentError::Config(format!(
            "batch size {batch_size} exceeds the {cap}-sample budget"
        )));
    }
    let trials = config.trials.unwrap_or(200);
    let mut plans = Vec::new();
    let mut nb = 1usize;
    while nb * batch_size <= cap {
        plans.push((batch_size, nb));
        nb *= 2;
    }
    let max_nb = cap / batch_size;
    if plans.last().map(|p| p.1) != Some(max_nb) {
        plans.push((batch_size, max_nb));
    }
    estimator_rows(
        ExperimentKind::BatchGrowth,
        f.as_ref(),
        &kinds,
        &plans,
        trials,
        config.seed,
        config.mode,
        config,
        reference,
    )
}

/// Bias / standard-error report per estimator at one N.
pub fn run_bias_check(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let reference = require_reference(f.as_ref())?;
    let kinds = resolve_estimators(
        config,
        &[EstimatorKind::Consistent, EstimatorKind::UnbiasedUniform],
    )?;
    let dim = f.dimension();
    let n = *config.n.first().unwrap_or(&16);
    let trials = config
        .trials
        .unwrap_or(if dim == 1 { 1_000_000 } else { 100_000 });
    estimator_rows(
        ExperimentKind::BiasCheck,
        f.as_ref(),
        &kinds,
        &[(n, 1)],
        trials,
        config.seed,
        config.mode,
        config,
        reference,
    )
}

/// Empirical order-statistic positions and adjacent gaps vs the
/// closed-form i/(N+1) and 1/(N+1).
pub fn run_orderstats(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    let n = *config.n.first().unwrap_or(&10);
    let trials = config.trials.unwrap_or(100_000);
    let sorted_per_trial = run_trials(trials, Seed(config.seed), |seed| {
        let set = sampling::sample_uniform_iid(n, 1, seed)?;
        let mut xs: Vec<f64> = set.points.iter().map(|p| p.coords()[0]).collect();
        xs.sort_by(f64::total_cmp);
        Ok(xs)
    })?;
    let mut rows = Vec::new();
    let mut push = |label: String, values: Vec<f64>, reference: f64| {
        let stats = summarize(&values, Some(reference));
        rows.push(ResultRow {
            experiment: ExperimentKind::Orderstats.to_string(),
            estimator: label,
            mode: "-".to_string(),
            n,
            s: 0,
            batch_size: n,
            n_batches: 1,
            trials,
            mean: stats.mean,
            mse: stats.mse,
            variance: stats.variance,
            bias: stats.bias,
            se: stats.se,
            seed: config.seed,
        });
    };
    let expected_gap = 1.0 / (n as f64 + 1.0);
    for i in 0..n {
        let values: Vec<f64> = sorted_per_trial.iter().map(|xs| xs[i]).collect();
        push(format!("pos_{}", i + 1), values, (i + 1) as f64 * expected_gap);
    }
    for i in 0..=n {
        let values: Vec<f64> = sorted_per_trial
            .iter()
            .map(|xs| {
                let lo = if i == 0 { 0.0 } else { xs[i - 1] };
                let hi = if i == n { 1.0 } else { xs[i] };
                hi - lo
            })
            .collect();
        push(format!("gap_{i}"), values, expected_gap);
    }
    Ok(rows)
}

/// Counts of cells per boundary order. 1D counts are asserted exact each
/// trial; 2D counts are reported next to the grid-model formula.
pub fn run_boundary_cardinality(
    config: &ExperimentConfig,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let dim = f.dimension();
    let ns = if config.n.is_empty() {
        if dim == 1 {
            vec![3, 10, 100]
        } else {
            vec![256]
        }
    } else {
        config.n.clone()
    };
    let trials = config.trials.unwrap_or(10_000);
    let mut rows = Vec::new();
    for &n in &ns {
        let counts_per_trial = run_trials(trials, Seed(config.seed), |seed| {
            let set = sampling::sample_uniform_iid(n, dim, seed)?;
            let partition =
                geometry::partition_samples(&set.points, &geometry::DomainBox::unit(dim))?;
            let mut counts = [0usize; 5];
            for cell in &partition.cells {
                counts[cell.boundary_order().min(4)] += 1;
            }
            if dim == 1 && n >= 2 && (counts[1] != 2 || counts[0] != n - 2) {
                return Err(ExperimentError::Invariant(format!(
                    "1D boundary counts ({}, {}) differ from ({}, 2) at N={n}",
                    counts[0],
                    counts[1],
                    n - 2
                )));
            }
            Ok(counts)
        })?;
        let per_axis = (n as f64).powf(1.0 / dim as f64);
        for order in 0..=2 * dim {
            let values: Vec<f64> = counts_per_trial
                .iter()
                .map(|c| c[order] as f64)
                .collect();
            // corrected grid-model count: binom(D,d) 2^d (n-2)^(D-d)
            let formula = if order <= dim {
                let binom = if dim == 2 && order == 1 { 2.0 } else { 1.0 };
                binom
                    * 2f64.powi(order as i32)
                    * (per_axis - 2.0).max(0.0).powi((dim - order) as i32)
            } else {
                0.0
            };
            let stats = summarize(&values, Some(formula));
            rows.push(ResultRow {
                experiment: ExperimentKind::BoundaryCardinality.to_string(),
                estimator: format!("order_{order}"),
                mode: "-".to_string(),
                n,
                s: 0,
                batch_size: n,
                n_batches: 1,
                trials,
                mean: stats.mean,
                mse: stats.mse,
                variance: stats.variance,
                bias: stats.bias,
                se: stats.se,
                seed: config.seed,
            });
        }
    }
    Ok(rows)
}

/// Dispatch on the config's experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    if let Some(t) = config.trials {
        if t < 1 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
    }
    match config.experiment {
        ExperimentKind::Convergence => run_convergence(config),
        ExperimentKind::StrataSweep => run_strata_sweep(config),
        ExperimentKind::BatchFixedTotal => run_batch_fixed_total(config),
        ExperimentKind::BatchGrowth => run_batch_growth(config),
        ExperimentKind::BiasCheck => run_bias_check(config),
        ExperimentKind::Orderstats => run_orderstats(config),
        ExperimentKind::BoundaryCardinality => run_boundary_cardinality(config),
    }
}
