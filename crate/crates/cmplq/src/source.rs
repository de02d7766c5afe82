//! Seedable iid source models and deterministic random streams.
//!
//! Every random quantity in this crate is drawn from an [`RngStream`], a
//! ChaCha8 generator addressed by `(seed, stream_id)`. ChaCha8 is a fixed,
//! platform-independent algorithm with cheap stream selection, so identical
//! addresses reproduce identical draws on any machine. The generator choice
//! is part of the reproducibility contract and must not change silently.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splitmix64 finalizer; used to derive child stream ids.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A deterministic random stream identified by `(seed, stream_id)`.
///
/// Streams with distinct ids under the same seed are independent ChaCha8
/// streams. Child streams are derived by mixing the parent id with a tag
/// through splitmix64, which gives every task in an experiment a stable
/// address in a tree rooted at the master seed.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derive an independent child stream. Does not advance `self`; deriving
    /// the same child twice yields the same stream from its start.
    pub fn substream(&self, child: u64) -> RngStream {
        RngStream::new(self.seed, splitmix64(self.stream_id ^ splitmix64(child)))
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform_f64(&mut self) -> f64 {
        self.rng.random()
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Which iid marginal the source draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    /// Each coordinate iid N(0, 1).
    #[serde(rename = "gaussian")]
    GaussianStd,
    /// Each coordinate iid uniform on [0, 1].
    #[serde(rename = "uniform")]
    UniformUnit,
}

impl SourceKind {
    pub fn marginal_mean(self) -> f64 {
        match self {
            SourceKind::GaussianStd => 0.0,
            SourceKind::UniformUnit => 0.5,
        }
    }

    pub fn marginal_variance(self) -> f64 {
        match self {
            SourceKind::GaussianStd => 1.0,
            SourceKind::UniformUnit => 1.0 / 12.0,
        }
    }

    pub fn marginal_pdf(self, x: f64) -> f64 {
        match self {
            SourceKind::GaussianStd => {
                (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            SourceKind::UniformUnit => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceKind::GaussianStd => write!(f, "gaussian"),
            SourceKind::UniformUnit => write!(f, "uniform"),
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SourceKind::GaussianStd),
            "uniform" => Ok(SourceKind::UniformUnit),
            other => Err(Error::InvalidParameter(format!(
                "unknown source kind {other:?}, expected \"gaussian\" or \"uniform\""
            ))),
        }
    }
}

/// An iid source of `dim`-dimensional super-symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceModel {
    kind: SourceKind,
    dim: usize,
}

impl SourceModel {
    pub fn new(kind: SourceKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "source dimension must be at least 1".into(),
            ));
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One iid draw of length `dim`.
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }

    /// Fill `out` with one draw; avoids allocation in sampling loops.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            SourceKind::GaussianStd => {
                for v in out.iter_mut() {
                    *v = rng.standard_normal();
                }
            }
            SourceKind::UniformUnit => {
                for v in out.iter_mut() {
                    *v = rng.uniform_f64();
                }
            }
        }
    }

    /// Per-coordinate (mean, variance).
    pub fn marginal_moments(&self) -> (f64, f64) {
        (self.kind.marginal_mean(), self.kind.marginal_variance())
    }

    /// Density of one coordinate at `x`.
    pub fn marginal_pdf(&self, x: f64) -> f64 {
        self.kind.marginal_pdf(x)
    }

    /// The mean vector, which is also the decode fallback point.
    pub fn mean_vector(&self) -> Vec<f64> {
        vec![self.kind.marginal_mean(); self.dim]
    }

    /// Trace of the covariance: `dim` times the marginal variance.
    pub fn total_variance(&self) -> f64 {
        self.dim as f64 * self.kind.marginal_variance()
    }
}
