//! The four compared estimators plus the consistent reweighted
//! estimator: standard MC, Voronoi-volume reweighting, its
//! bias-corrected variant for i.i.d. uniform samples, stratified MC and
//! the bias-corrected stratified variant.
//!
//! The corrected weight of a sample divides its Voronoi volume by a
//! coefficient `C(b) = (3/2)^b * N / denom`, where `b` is the cell's
//! boundary order and `denom` depends on the coefficient mode: the
//! per-axis interval count `n + s` as written, or its D-th power
//! `(n + s)^D` which closes the expected-weight budget in 2D. The modes
//! coincide for D = 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError, Partition};
use crate::sampling::{self, SampleSet, Seed};

/// Evaluatable function on the open unit hypercube.
pub trait Integrand: Sync {
    fn dimension(&self) -> usize;
    fn evaluate(&self, point: &[f64]) -> f64;
    /// Exact value of the integral over the unit hypercube, when known.
    fn reference_integral(&self) -> Option<f64> {
        None
    }
}

/// Closure-backed integrand.
pub struct FnIntegrand<F: Fn(&[f64]) -> f64 + Sync> {
    pub dim: usize,
    pub func: F,
    pub reference: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        (self.func)(point)
    }

    fn reference_integral(&self) -> Option<f64> {
        self.reference
    }
}

/// Denominator choice for the correction coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CoefficientMode {
    /// `(n + s)^D`: restores a unit expected-weight budget under the grid
    /// model in any dimension. Equals `PaperLiteral` for D = 1.
    #[default]
    GridConsistent,
    /// `n + s` exactly as written.
    PaperLiteral,
}

impl std::fmt::Display for CoefficientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoefficientMode::GridConsistent => write!(f, "grid"),
            CoefficientMode::PaperLiteral => write!(f, "paper"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    StandardMC,
    Consistent,
    UnbiasedUniform,
    StratifiedMC,
    UnbiasedStratified,
    Batched,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimatorKind::StandardMC => "mc",
            EstimatorKind::Consistent => "con",
            EstimatorKind::UnbiasedUniform => "gr",
            EstimatorKind::StratifiedMC => "strat",
            EstimatorKind::UnbiasedStratified => "gr-strat",
            EstimatorKind::Batched => "batched",
        };
        write!(f, "{s}")
    }
}

impl EstimatorKind {
    pub fn is_stratified(&self) -> bool {
        matches!(
            self,
            EstimatorKind::StratifiedMC | EstimatorKind::UnbiasedStratified
        )
    }
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("integrand dimension {integrand} does not match sample dimension {samples}")]
    DimensionMismatch { integrand: usize, samples: usize },
    #[error("estimator requires a stratified sample set")]
    MissingStratification,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Estimator output.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub n_samples: usize,
    pub kind: EstimatorKind,
    pub seed: Option<Seed>,
    pub mode: Option<CoefficientMode>,
    /// Set when N (or a stratum's sample count) is below the 3^D floor
    /// the unbiasedness derivation assumes.
    pub small_n_warning: bool,
}

impl Estimate {
    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Per-sample weights; the consistent scheme sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub values: Vec<f64>,
}

impl Weights {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_dims(f: &dyn Integrand, samples: &SampleSet) -> Result<(), EstimatorError> {
    if f.dimension() != samples.dimension {
        return Err(EstimatorError::DimensionMismatch {
            integrand: f.dimension(),
            samples: samples.dimension,
        });
    }
    Ok(())
}

/// `(3/2)^b * N / denom`, with the real-valued per-axis sample count
/// `n = N^(1/D)` and `s = 1` when unstratified.
pub fn correction_coefficient(
    boundary_order: usize,
    n_samples: usize,
    dim: usize,
    mode: CoefficientMode,
    strata_per_axis: usize,
) -> f64 {
    let n = (n_samples as f64).powf(1.0 / dim as f64);
    let s = strata_per_axis.max(1) as f64;
    let denom = match mode {
        CoefficientMode::PaperLiteral => n + s,
        CoefficientMode::GridConsistent => (n + s).powi(dim as i32),
    };
    1.5f64.powi(boundary_order as i32) * n_samples as f64 / denom
}

/// Voronoi-volume weights normalized by the domain volume.
pub fn consistent_weights(partition: &Partition) -> Weights {
    let domain_volume = partition.domain.volume();
    Weights {
        values: partition.cells.iter().map(|c| c.volume / domain_volume).collect(),
    }
}

/// Voronoi-volume weights divided by the per-sample correction
/// coefficient of each cell's boundary order.
pub fn corrected_weights(
    partition: &Partition,
    n_samples: usize,
    dim: usize,
    mode: CoefficientMode,
    strata_per_axis: usize,
) -> Weights {
    let domain_volume = partition.domain.volume();
    Weights {
        values: partition
            .cells
            .iter()
            .map(|c| {
                c.volume
                    / (correction_coefficient(c.boundary_order(), n_samples, dim, mode, strata_per_axis)
                        * domain_volume)
            })
            .collect(),
    }
}

/// Weighted sum of integrand evaluations over precomputed weights.
pub fn apply_weights(f: &dyn Integrand, samples: &SampleSet, weights: &Weights) -> f64 {
    samples
        .points
        .iter()
        .zip(&weights.values)
        .map(|(p, w)| w * f.evaluate(p.coords()))
        .sum()
}

/// `(1/N) Σ f(x_i)`.
pub fn estimate_standard_mc(f: &dyn Integrand, samples: &SampleSet) -> Result<Estimate, EstimatorError> {
    check_dims(f, samples)?;
    let n = samples.len();
    let sum: f64 = samples.points.iter().map(|p| f.evaluate(p.coords())).sum();
    Ok(Estimate {
        value: sum / n as f64,
        n_samples: n,
        kind: EstimatorKind::StandardMC,
        seed: None,
        mode: None,
        small_n_warning: false,
    })
}

/// `Σ |V_i| f(x_i)` over the global (non-stratified) partition.
pub fn estimate_consistent(f: &dyn Integrand, samples: &SampleSet) -> Result<Estimate, EstimatorError> {
    check_dims(f, samples)?;
    let partition = geometry::partition_samples(
        &samples.points,
        &geometry::DomainBox::unit(samples.dimension),
    )?;
    let weights = consistent_weights(&partition);
    Ok(Estimate {
        value: apply_weights(f, samples, &weights),
        n_samples: samples.len(),
        kind: EstimatorKind::Consistent,
        seed: None,
        mode: None,
        small_n_warning: false,
    })
}

fn small_n_floor(dim: usize) -> usize {
    3usize.pow(dim as u32)
}

/// `Σ |V_i| f(x_i) / C(b_i)` over the global partition; i.i.d. uniform
/// samples are the caller contract.
pub fn estimate_unbiased_uniform(
    f: &dyn Integrand,
    samples: &SampleSet,
    mode: CoefficientMode,
) -> Result<Estimate, EstimatorError> {
    check_dims(f, samples)?;
    let dim = samples.dimension;
    let partition =
        geometry::partition_samples(&samples.points, &geometry::DomainBox::unit(dim))?;
    let weights = corrected_weights(&partition, samples.len(), dim, mode, 0);
    Ok(Estimate {
        value: apply_weights(f, samples, &weights),
        n_samples: samples.len(),
        kind: EstimatorKind::UnbiasedUniform,
        seed: None,
        mode: Some(mode),
        small_n_warning: samples.len() < small_n_floor(dim),
    })
}

/// Per-stratum sample means scaled by stratum volumes; for equal strata
/// this is the plain sample mean.
pub fn estimate_stratified_mc(
    f: &dyn Integrand,
    samples: &SampleSet,
) -> Result<Estimate, EstimatorError> {
    check_dims(f, samples)?;
    let strat = samples
        .stratification
        .as_ref()
        .ok_or(EstimatorError::MissingStratification)?;
    let n_strata = strat.boxes.len();
    let mut sums = vec![0.0; n_strata];
    let mut counts = vec![0usize; n_strata];
    for (i, p) in samples.points.iter().enumerate() {
        let s = strat.stratum_of[i];
        sums[s] += f.evaluate(p.coords());
        counts[s] += 1;
    }
    let mut value = 0.0;
    for s in 0..n_strata {
        if counts[s] > 0 {
            value += strat.boxes[s].volume() * sums[s] / counts[s] as f64;
        }
    }
    Ok(Estimate {
        value,
        n_samples: samples.len(),
        kind: EstimatorKind::StratifiedMC,
        seed: None,
        mode: None,
        small_n_warning: false,
    })
}

/// Corrected weights over per-stratum partitions, boundary orders counted
/// against each stratum's box and `s` entering the coefficient.
pub fn estimate_unbiased_stratified(
    f: &dyn Integrand,
    samples: &SampleSet,
    mode: CoefficientMode,
) -> Result<Estimate, EstimatorError> {
    check_dims(f, samples)?;
    let strat = samples
        .stratification
        .as_ref()
        .ok_or(EstimatorError::MissingStratification)?;
    let strata_per_axis = strat.strata_per_axis;
    let per_stratum = samples.len() / strat.boxes.len().max(1);
    let small_n = per_stratum < small_n_floor(samples.dimension);
    let partition = geometry::partition_stratified(samples)?;
    let weights = corrected_weights(
        &partition,
        samples.len(),
        samples.dimension,
        mode,
        strata_per_axis,
    );
    Ok(Estimate {
        value: apply_weights(f, samples, &weights),
        n_samples: samples.len(),
        kind: EstimatorKind::UnbiasedStratified,
        seed: None,
        mode: Some(mode),
        small_n_warning: small_n,
    })
}

fn single_estimate(
    kind: EstimatorKind,
    f: &dyn Integrand,
    n: usize,
    seed: Seed,
    mode: CoefficientMode,
    strata_per_axis: usize,
) -> Result<Estimate, EstimatorError> {
    let dim = f.dimension();
    let samples = if kind.is_stratified() {
        sampling::sample_stratified(n, strata_per_axis.max(1), dim, seed)
    } else {
        sampling::sample_uniform_iid(n, dim, seed)
    }
    .map_err(|e| match e {
        sampling::SamplingError::UnsupportedDimension(d) => {
            EstimatorError::Geometry(GeometryError::UnsupportedDimension(d))
        }
        _ => EstimatorError::Geometry(GeometryError::EmptyInput),
    })?;
    let est = match kind {
        EstimatorKind::StandardMC => estimate_standard_mc(f, &samples)?,
        EstimatorKind::Consistent => estimate_consistent(f, &samples)?,
        EstimatorKind::UnbiasedUniform => estimate_unbiased_uniform(f, &samples, mode)?,
        EstimatorKind::StratifiedMC => estimate_stratified_mc(f, &samples)?,
        EstimatorKind::UnbiasedStratified => estimate_unbiased_stratified(f, &samples, mode)?,
        EstimatorKind::Batched => unreachable!("nested batching"),
    };
    Ok(est.with_seed(seed))
}

/// Run one estimator of the given kind on a fresh sample set seeded by
/// `derive_trial_seed(base_seed, batch_index)`.
pub fn estimate_single(
    kind: EstimatorKind,
    f: &dyn Integrand,
    n: usize,
    seed: Seed,
    mode: CoefficientMode,
    strata_per_axis: usize,
) -> Result<Estimate, EstimatorError> {
    single_estimate(kind, f, n, seed, mode, strata_per_axis)
}

/// Arithmetic mean of `n_batches` independent estimates, accumulated in
/// batch-index order.
pub fn estimate_batched(
    kind: EstimatorKind,
    f: &dyn Integrand,
    batch_size: usize,
    n_batches: usize,
    base_seed: Seed,
    mode: CoefficientMode,
    strata_per_axis: usize,
) -> Result<Estimate, EstimatorError> {
    assert!(batch_size >= 1 && n_batches >= 1);
    let mut sum = 0.0;
    let mut warned = false;
    for batch in 0..n_batches {
        let seed = sampling::derive_trial_seed(base_seed, batch as u64);
        let est = single_estimate(kind, f, batch_size, seed, mode, strata_per_axis)?;
        sum += est.value;
        warned |= est.small_n_warning;
    }
    Ok(Estimate {
        value: sum / n_batches as f64,
        n_samples: batch_size * n_batches,
        kind: if n_batches == 1 { kind } else { EstimatorKind::Batched },
        seed: Some(base_seed),
        mode: Some(mode),
        small_n_warning: warned,
    })
}
