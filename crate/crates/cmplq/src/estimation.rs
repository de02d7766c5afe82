//! Monte Carlo estimation: region centroids for a configuration, and the
//! distortion of a complete design.
//!
//! Everything here is deterministic given the input stream, and distortion
//! is reported per super-symbol — the squared Euclidean error summed over
//! all `d` coordinates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CombinerConfig, RegionLabel};
use crate::quantizer::{Codebook, CodebookEntry, QuantizerDesign};
use crate::source::{RngStream, SourceModel};

/// Sample budgets for Monte Carlo estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationParams {
    /// Points drawn per centroid-estimation pass.
    pub n_points_centroids: usize,
    /// Points drawn for an MSE estimate.
    pub n_points_mse: usize,
    /// Observed regions with fewer points than this trigger top-up passes.
    pub min_points_per_region: usize,
    /// Bound on top-up passes, so near-zero-mass regions cannot stall the
    /// estimator; regions still under-sampled keep their available mean.
    pub max_topup_rounds: usize,
}

impl Default for EstimationParams {
    fn default() -> Self {
        Self {
            n_points_centroids: 100_000,
            n_points_mse: 100_000,
            min_points_per_region: 50,
            max_topup_rounds: 5,
        }
    }
}

impl EstimationParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_points_centroids == 0 || self.n_points_mse == 0 {
            return Err(Error::InvalidParameter(
                "estimation point counts must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The same budgets with `factor`× the sample counts; used for the
    /// final high-precision re-estimation of an accepted design.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            n_points_centroids: self.n_points_centroids.saturating_mul(factor),
            n_points_mse: self.n_points_mse.saturating_mul(factor),
            ..*self
        }
    }
}

/// A Monte Carlo distortion estimate with its statistical precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseEstimate {
    /// Mean squared error per super-symbol (summed over coordinates).
    pub value: f64,
    /// Sample standard deviation of per-point squared errors over √n.
    pub std_error: f64,
    pub n_points: usize,
}

impl MseEstimate {
    /// Distortion per coordinate, for comparisons across dimensions.
    pub fn per_coordinate(&self, dim: usize) -> f64 {
        self.value / dim as f64
    }
}

/// Comparator words index a dense table up to this many hyperplanes; larger
/// arrangements fall back to an ordered map.
const DENSE_LIMIT: usize = 16;

/// Per-region accumulator of counts and coordinate sums, keyed by word.
struct CentroidAcc {
    dim: usize,
    dense: Option<(Vec<u64>, Vec<f64>)>,
    sparse: BTreeMap<u64, (u64, Vec<f64>)>,
}

impl CentroidAcc {
    fn new(k: usize, dim: usize) -> Self {
        let dense = (k <= DENSE_LIMIT).then(|| {
            let r = 1usize << k;
            (vec![0u64; r], vec![0.0; r * dim])
        });
        Self {
            dim,
            dense,
            sparse: BTreeMap::new(),
        }
    }

    #[inline]
    fn add(&mut self, word: u64, x: &[f64]) {
        if let Some((counts, sums)) = &mut self.dense {
            let w = word as usize;
            counts[w] += 1;
            let base = w * self.dim;
            for (s, v) in sums[base..base + self.dim].iter_mut().zip(x) {
                *s += v;
            }
        } else {
            let (count, sum) = self
                .sparse
                .entry(word)
                .or_insert_with(|| (0, vec![0.0; self.dim]));
            *count += 1;
            for (s, v) in sum.iter_mut().zip(x) {
                *s += v;
            }
        }
    }

    fn any_observed_below(&self, min: u64) -> bool {
        if let Some((counts, _)) = &self.dense {
            counts.iter().any(|&c| c > 0 && c < min)
        } else {
            self.sparse.values().any(|(c, _)| *c < min)
        }
    }

    /// Observed regions as (word, count, mean) in ascending word order.
    fn into_regions(self) -> Vec<(u64, u64, Vec<f64>)> {
        let dim = self.dim;
        match self.dense {
            Some((counts, sums)) => counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(w, &c)| {
                    let base = w * dim;
                    let mean = sums[base..base + dim]
                        .iter()
                        .map(|s| s / c as f64)
                        .collect();
                    (w as u64, c, mean)
                })
                .collect(),
            None => self
                .sparse
                .into_iter()
                .map(|(w, (c, sum))| {
                    let mean = sum.iter().map(|s| s / c as f64).collect();
                    (w, c, mean)
                })
                .collect(),
        }
    }
}

/// Estimate region centroids and weights for a configuration.
///
/// Runs one base pass of `n_points_centroids` draws, then up to
/// `max_topup_rounds` further passes while any observed region holds fewer
/// than `min_points_per_region` points. Every draw from every pass
/// contributes, so weights always sum to 1 over the observed regions.
pub fn estimate_centroids(
    config: &CombinerConfig,
    source: &SourceModel,
    params: &EstimationParams,
    rng: &mut RngStream,
) -> Result<Codebook> {
    params.validate()?;
    if config.dim() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            got: source.dim(),
        });
    }
    let k = config.k();
    let dim = config.dim();
    let mut acc = CentroidAcc::new(k, dim);
    let mut total: u64 = 0;
    let mut passes = 0usize;
    let mut x = vec![0.0; dim];
    loop {
        for _ in 0..params.n_points_centroids {
            source.sample_into(rng, &mut x);
            acc.add(config.sign_word(&x), &x);
        }
        total += params.n_points_centroids as u64;
        passes += 1;
        if passes > params.max_topup_rounds
            || !acc.any_observed_below(params.min_points_per_region as u64)
        {
            break;
        }
    }

    let total_f = total as f64;
    let mut entries = BTreeMap::new();
    for (word, count, mean) in acc.into_regions() {
        entries.insert(
            RegionLabel::from_word(k, word),
            CodebookEntry {
                centroid: mean,
                weight: count as f64 / total_f,
            },
        );
    }
    Codebook::new(entries, source.mean_vector())
}

/// Reconstruction-point lookup keyed by comparator word, with the fallback
/// point at the final index.
enum DecodeTable {
    Dense { idx: Vec<u32> },
    Sparse { map: BTreeMap<u64, u32> },
}

struct Decoder {
    table: DecodeTable,
    /// Flattened centroids in label order, fallback appended last.
    points: Vec<f64>,
    dim: usize,
    fallback_idx: u32,
}

impl Decoder {
    fn build(k: usize, codebook: &Codebook) -> Self {
        let dim = codebook.dim();
        let r = codebook.len();
        let mut points = Vec::with_capacity((r + 1) * dim);
        let fallback_idx = r as u32;
        let table = if k <= DENSE_LIMIT {
            let mut idx = vec![fallback_idx; 1usize << k];
            for (i, (label, entry)) in codebook.iter().enumerate() {
                idx[label.bits() as usize] = i as u32;
                points.extend_from_slice(&entry.centroid);
            }
            DecodeTable::Dense { idx }
        } else {
            let mut map = BTreeMap::new();
            for (i, (label, entry)) in codebook.iter().enumerate() {
                map.insert(label.bits(), i as u32);
                points.extend_from_slice(&entry.centroid);
            }
            DecodeTable::Sparse { map }
        };
        points.extend_from_slice(codebook.fallback());
        Self {
            table,
            points,
            dim,
            fallback_idx,
        }
    }

    #[inline]
    fn point(&self, word: u64) -> &[f64] {
        let i = match &self.table {
            DecodeTable::Dense { idx } => idx[word as usize],
            DecodeTable::Sparse { map } => {
                map.get(&word).copied().unwrap_or(self.fallback_idx)
            }
        };
        let base = i as usize * self.dim;
        &self.points[base..base + self.dim]
    }
}

/// Shared accumulation core; also used by the optimizer to score candidate
/// (configuration, codebook) pairs without building full designs.
pub(crate) fn config_mse(
    config: &CombinerConfig,
    codebook: &Codebook,
    source: &SourceModel,
    n_points: usize,
    rng: &mut RngStream,
) -> MseEstimate {
    debug_assert_eq!(config.dim(), source.dim());
    debug_assert!(n_points > 0);
    let decoder = Decoder::build(config.k(), codebook);
    let dim = config.dim();
    let mut x = vec![0.0; dim];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_points {
        source.sample_into(rng, &mut x);
        let c = decoder.point(config.sign_word(&x));
        let mut err = 0.0;
        for (xi, ci) in x.iter().zip(c) {
            let delta = xi - ci;
            err += delta * delta;
        }
        sum += err;
        sum_sq += err * err;
    }
    finish_estimate(sum, sum_sq, n_points)
}

pub(crate) fn finish_estimate(sum: f64, sum_sq: f64, n: usize) -> MseEstimate {
    let n_f = n as f64;
    let value = sum / n_f;
    let std_error = if n > 1 {
        let var = ((sum_sq - sum * sum / n_f) / (n_f - 1.0)).max(0.0);
        (var / n_f).sqrt()
    } else {
        0.0
    };
    MseEstimate {
        value,
        std_error,
        n_points: n,
    }
}

/// Estimate the distortion of a design over `n_points_mse` fresh draws.
pub fn estimate_mse(
    design: &QuantizerDesign,
    params: &EstimationParams,
    rng: &mut RngStream,
) -> Result<MseEstimate> {
    params.validate()?;
    Ok(config_mse(
        design.config(),
        design.codebook(),
        design.source(),
        params.n_points_mse,
        rng,
    ))
}

/// Estimate two designs on the identical sample stream (common random
/// numbers), so their difference is far less noisy than two independent
/// estimates.
pub fn estimate_mse_paired(
    design_a: &QuantizerDesign,
    design_b: &QuantizerDesign,
    params: &EstimationParams,
    rng: &mut RngStream,
) -> Result<(MseEstimate, MseEstimate)> {
    params.validate()?;
    if design_a.source() != design_b.source() {
        return Err(Error::InvalidParameter(
            "paired estimation requires designs for the identical source".into(),
        ));
    }
    let source = design_a.source();
    let dim = source.dim();
    let dec_a = Decoder::build(design_a.k(), design_a.codebook());
    let dec_b = Decoder::build(design_b.k(), design_b.codebook());
    let mut x = vec![0.0; dim];
    let (mut sum_a, mut sq_a, mut sum_b, mut sq_b) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..params.n_points_mse {
        source.sample_into(rng, &mut x);
        let wa = design_a.config().sign_word(&x);
        let wb = design_b.config().sign_word(&x);
        let mut ea = 0.0;
        for (xi, ci) in x.iter().zip(dec_a.point(wa)) {
            let d = xi - ci;
            ea += d * d;
        }
        let mut eb = 0.0;
        for (xi, ci) in x.iter().zip(dec_b.point(wb)) {
            let d = xi - ci;
            eb += d * d;
        }
        sum_a += ea;
        sq_a += ea * ea;
        sum_b += eb;
        sq_b += eb * eb;
    }
    Ok((
        finish_estimate(sum_a, sq_a, params.n_points_mse),
        finish_estimate(sum_b, sq_b, params.n_points_mse),
    ))
}
