//! The comparison-limited quantizer: a combiner configuration paired with a
//! codebook of region centroids, plus lossless JSON (de)serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CombinerConfig, Hyperplane, RegionLabel, MAX_COMPARATORS};
use crate::source::SourceModel;

/// Reconstruction point and probability mass of one region.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookEntry {
    pub centroid: Vec<f64>,
    pub weight: f64,
}

/// Map from observed region labels to reconstruction points.
///
/// Keys are only the regions actually observed during estimation — an
/// arrangement need not realize its maximal region count, and regions of
/// negligible mass may go unseen. Decoding an absent label falls back to
/// the source mean, the MSE-optimal choice given no region information.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    entries: BTreeMap<RegionLabel, CodebookEntry>,
    fallback: Vec<f64>,
}

impl Codebook {
    pub fn new(
        entries: BTreeMap<RegionLabel, CodebookEntry>,
        fallback: Vec<f64>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDesign("codebook has no entries".into()));
        }
        if fallback.is_empty() || fallback.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign(
                "codebook fallback must be a finite nonempty vector".into(),
            ));
        }
        let dim = fallback.len();
        let label_len = entries.keys().next().map(|l| l.len()).unwrap_or(0);
        let mut total = 0.0;
        for (label, entry) in &entries {
            if label.len() != label_len {
                return Err(Error::LabelLengthMismatch {
                    expected: label_len,
                    got: label.len(),
                });
            }
            if entry.centroid.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: entry.centroid.len(),
                });
            }
            if entry.centroid.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDesign(format!(
                    "centroid of region {label} is not finite"
                )));
            }
            if !entry.weight.is_finite() || !(0.0..=1.0 + 1e-9).contains(&entry.weight) {
                return Err(Error::InvalidDesign(format!(
                    "weight of region {label} is outside [0, 1]"
                )));
            }
            total += entry.weight;
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDesign(format!(
                "codebook weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { entries, fallback })
    }

    /// Number of occupied regions.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Length of every key, i.e. the comparator count k.
    pub fn label_len(&self) -> usize {
        self.entries.keys().next().map(|l| l.len()).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.fallback.len()
    }

    pub fn get(&self, label: &RegionLabel) -> Option<&CodebookEntry> {
        self.entries.get(label)
    }

    pub fn fallback(&self) -> &[f64] {
        &self.fallback
    }

    /// Entries in canonical label order.
    pub fn iter(&self) -> impl Iterator<Item = (&RegionLabel, &CodebookEntry)> {
        self.entries.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &RegionLabel> {
        self.entries.keys()
    }

    pub fn weight_total(&self) -> f64 {
        self.entries.values().map(|e| e.weight).sum()
    }
}

/// Provenance metadata carried with a design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub iterations: usize,
    pub restarts: usize,
}

/// A complete comparison-limited quantizer: configuration, codebook, the
/// source it was designed for, its estimated distortion, and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizerDesign {
    config: CombinerConfig,
    codebook: Codebook,
    source: SourceModel,
    mse_estimate: f64,
    provenance: Provenance,
}

impl QuantizerDesign {
    pub fn new(
        config: CombinerConfig,
        codebook: Codebook,
        source: SourceModel,
        mse_estimate: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if config.dim() != source.dim() {
            return Err(Error::DimensionMismatch {
                expected: source.dim(),
                got: config.dim(),
            });
        }
        if codebook.dim() != config.dim() {
            return Err(Error::DimensionMismatch {
                expected: config.dim(),
                got: codebook.dim(),
            });
        }
        if codebook.label_len() != config.k() {
            return Err(Error::LabelLengthMismatch {
                expected: config.k(),
                got: codebook.label_len(),
            });
        }
        if !mse_estimate.is_finite() || mse_estimate < 0.0 {
            return Err(Error::InvalidDesign(format!(
                "mse estimate {mse_estimate} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            config,
            codebook,
            source,
            mse_estimate,
            provenance,
        })
    }

    pub fn config(&self) -> &CombinerConfig {
        &self.config
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn k(&self) -> usize {
        self.config.k()
    }

    pub fn mse_estimate(&self) -> f64 {
        self.mse_estimate
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The same design relabeled as the product of a `restarts`-way search,
    /// so a design returned from a multi-restart run records the full
    /// budget that produced it.
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.provenance.restarts = restarts;
        self
    }

    /// Comparator word of `x` as a region label.
    pub fn encode(&self, x: &[f64]) -> Result<RegionLabel> {
        self.config.sign_vector(x)
    }

    /// Reconstruction point for a label: the stored centroid, or the source
    /// mean for labels never observed during estimation.
    pub fn decode(&self, label: &RegionLabel) -> Result<&[f64]> {
        if label.len() != self.config.k() {
            return Err(Error::LabelLengthMismatch {
                expected: self.config.k(),
                got: label.len(),
            });
        }
        Ok(self
            .codebook
            .get(label)
            .map(|e| e.centroid.as_slice())
            .unwrap_or(self.codebook.fallback()))
    }

    /// Full encode/decode round trip.
    pub fn quantize(&self, x: &[f64]) -> Result<Vec<f64>> {
        let label = self.encode(x)?;
        Ok(self.decode(&label)?.to_vec())
    }

    /// Serialize to the canonical JSON form. Floating-point values use the
    /// shortest representation that round-trips exactly, so save/load is
    /// lossless.
    pub fn to_json(&self) -> String {
        let doc = DesignDoc {
            dim: self.dim(),
            k: self.k(),
            source: self.source.kind(),
            seed: self.provenance.seed,
            iterations: self.provenance.iterations,
            restarts: self.provenance.restarts,
            v: self.config.normal_matrix(),
            t: self.config.offsets(),
            codebook: self
                .codebook
                .iter()
                .map(|(label, e)| DesignEntry {
                    label: *label,
                    centroid: e.centroid.clone(),
                    weight: e.weight,
                })
                .collect(),
            mse_estimate: self.mse_estimate,
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("design serialization");
        out.push('\n');
        out
    }

    /// Parse and fully validate a design from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DesignDoc = serde_json::from_str(text)?;
        doc.into_design()
    }
}

/// On-disk schema of a design. Kept separate from the domain types so the
/// file format is explicit and every invariant is re-checked on load.
#[derive(Serialize, Deserialize)]
struct DesignDoc {
    dim: usize,
    k: usize,
    source: crate::source::SourceKind,
    seed: u64,
    iterations: usize,
    restarts: usize,
    /// Row-major k×dim matrix of unit normals.
    #[serde(rename = "V")]
    v: Vec<f64>,
    t: Vec<f64>,
    codebook: Vec<DesignEntry>,
    mse_estimate: f64,
}

#[derive(Serialize, Deserialize)]
struct DesignEntry {
    label: RegionLabel,
    centroid: Vec<f64>,
    weight: f64,
}

impl DesignDoc {
    fn into_design(self) -> Result<QuantizerDesign> {
        if self.dim == 0 {
            return Err(Error::InvalidDesign("field `dim` must be at least 1".into()));
        }
        if self.k > MAX_COMPARATORS {
            return Err(Error::InvalidDesign(format!(
                "field `k` is {}, at most {MAX_COMPARATORS} comparators are supported",
                self.k
            )));
        }
        if self.v.len() != self.k * self.dim {
            return Err(Error::InvalidDesign(format!(
                "field `V` has {} entries, expected k*dim = {}",
                self.v.len(),
                self.k * self.dim
            )));
        }
        if self.t.len() != self.k {
            return Err(Error::InvalidDesign(format!(
                "field `t` has {} entries, expected k = {}",
                self.t.len(),
                self.k
            )));
        }
        let source = SourceModel::new(self.source, self.dim)?;
        let mut hyperplanes = Vec::with_capacity(self.k);
        for (j, (row, &offset)) in self.v.chunks(self.dim).zip(&self.t).enumerate() {
            let h = Hyperplane::from_unit(row.to_vec(), offset).map_err(|_| {
                Error::InvalidDesign(format!(
                    "row {j} of `V` is not a finite unit vector (with finite `t`)"
                ))
            })?;
            hyperplanes.push(h);
        }
        let config = CombinerConfig::new(self.dim, hyperplanes)?;
        let mut entries = BTreeMap::new();
        for (i, e) in self.codebook.into_iter().enumerate() {
            if e.label.len() != self.k {
                return Err(Error::InvalidDesign(format!(
                    "codebook entry {i} has a label of length {}, expected k = {}",
                    e.label.len(),
                    self.k
                )));
            }
            if entries
                .insert(e.label, CodebookEntry { centroid: e.centroid, weight: e.weight })
                .is_some()
            {
                return Err(Error::InvalidDesign(format!(
                    "codebook entry {i} repeats label {}",
                    e.label
                )));
            }
        }
        let codebook = Codebook::new(entries, source.mean_vector())?;
        QuantizerDesign::new(
            config,
            codebook,
            source,
            self.mse_estimate,
            Provenance {
                seed: self.seed,
                iterations: self.iterations,
                restarts: self.restarts,
            },
        )
    }
}
