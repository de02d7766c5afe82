//! Alternating optimization of the combiner configuration and codebook:
//! annealed global perturbations, local single-coordinate moves, greedy
//! candidate selection, and multiple random restarts.
//!
//! Every candidate (and the incumbent, once) is scored on one fixed,
//! shared evaluation stream — common random numbers — so acceptance
//! decisions compare like with like and the accepted distortion trace is
//! exactly nonincreasing rather than merely nonincreasing in expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{config_mse, estimate_centroids, EstimationParams};
use crate::geometry::{CombinerConfig, Hyperplane, MAX_COMPARATORS};
use crate::quantizer::{Codebook, Provenance, QuantizerDesign};
use crate::source::{RngStream, SourceKind, SourceModel};

/// Finest-to-coarsest ratio of the local offset ladder: the smallest grid
/// step is 1% of the full ±2-spread span.
const OFFSET_LADDER_RATIO: f64 = 0.01;

/// Coarsest Gaussian jitter applied to a single normal coordinate in a
/// local update (order-one rotations of a unit normal), and the ratio down
/// to the finest rung (~2° rotations).
const NORMAL_JITTER_COARSE: f64 = 1.0;
const NORMAL_JITTER_RATIO: f64 = 0.03;

/// Deterministic two-sided geometric ladder `±coarse·r^level` with `r`
/// chosen so the finest rung is `coarse · fine_ratio`. Mixing coarse and
/// fine steps in every candidate batch lets the search cross cell
/// boundaries (topology changes) and polish near-optimal positions without
/// an explicit cooling schedule for local moves.
fn two_sided_ladder(count: usize, coarse: f64, fine_ratio: f64) -> Vec<f64> {
    let levels = count.div_ceil(2).max(1);
    let r = if levels > 1 {
        fine_ratio.powf(1.0 / (levels as f64 - 1.0))
    } else {
        1.0
    };
    (0..count)
        .map(|i| {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            side * coarse * r.powi((i / 2) as i32)
        })
        .collect()
}

// Child-stream tags of the optimizer's master stream. Arbitrary but
// frozen: changing any of them silently changes every optimization result.
const TAG_DECISIONS: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_CENTROIDS: u64 = 3;
const TAG_EVAL: u64 = 4;
const TAG_FINAL_CENTROIDS: u64 = 5;
const TAG_FINAL_EVAL: u64 = 6;
const TAG_RESTART_BASE: u64 = 0x5245_5354;

/// Knobs of the alternating optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub total_iterations: usize,
    pub candidates_per_iteration: usize,
    /// Decay rate of the global-update probability `exp(-decay · i)`.
    pub global_prob_decay: f64,
    /// Scale of the first global perturbation.
    pub initial_step: f64,
    /// Geometric decay of the perturbation scale per iteration.
    pub step_decay: f64,
    pub restarts: usize,
    pub estimation: EstimationParams,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            total_iterations: 200,
            candidates_per_iteration: 8,
            global_prob_decay: 0.1,
            initial_step: 1.0,
            step_decay: 0.98,
            restarts: 5,
            estimation: EstimationParams::default(),
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0
            || self.candidates_per_iteration == 0
            || self.restarts == 0
        {
            return Err(Error::InvalidParameter(
                "iteration, candidate, and restart counts must be positive".into(),
            ));
        }
        if !(self.global_prob_decay > 0.0) || !(self.initial_step > 0.0) {
            return Err(Error::InvalidParameter(
                "global_prob_decay and initial_step must be positive".into(),
            ));
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(Error::InvalidParameter(
                "step_decay must lie strictly between 0 and 1".into(),
            ));
        }
        self.estimation.validate()
    }

    /// Probability of a global update at 1-indexed iteration `i`; the first
    /// iteration is global with probability `exp(-decay) ≈ 0.90` at the
    /// default decay.
    pub fn global_probability(&self, iteration: usize) -> f64 {
        (-self.global_prob_decay * iteration as f64).exp()
    }

    /// Perturbation scale at 1-indexed iteration `i`.
    pub fn step_scale(&self, iteration: usize) -> f64 {
        self.initial_step * self.step_decay.powi(iteration as i32)
    }
}

/// Which update family produced an iteration's candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateKind {
    Global,
    Local,
}

/// One accepted state per iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Incumbent distortion on the shared evaluation stream.
    pub accepted_mse: f64,
    pub update_kind: UpdateKind,
    pub occupied_regions: usize,
}

/// The accepted-state history of one optimization run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizationTrace {
    records: Vec<IterationRecord>,
}

impl OptimizationTrace {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Greedy acceptance guarantees this; exposed so tests and diagnostics
    /// can assert it cheaply.
    pub fn is_nonincreasing(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].accepted_mse <= w[0].accepted_mse)
    }
}

/// Angular jitter applied to the axis normals of a structured starting
/// draw, and the pilot-sample size used for its empirical quantile offsets.
const STRUCTURED_TILT: f64 = 0.03;
const STRUCTURED_PILOT: usize = 255;

/// A starting arrangement drawn from an even mixture of two families, both
/// intersecting the source bulk and both checked for general position:
///
/// * **isotropic** — normals uniform on the unit sphere; offsets via a
///   standard normal (Gaussian source) or through a uniform point of the
///   cube (uniform source). Covers arbitrary oblique arrangements.
/// * **structured** — the comparators are split near-evenly across the
///   coordinate axes; each hyperplane is a slightly tilted axis cut placed
///   at a jittered empirical quantile of its coordinate's marginal. Covers
///   grid-like arrangements, which greedy local search can polish but
///   rarely reaches from an oblique start (rotating a whole cut passes
///   through strictly worse intermediates).
///
/// Mixing the two families across restarts lets the multi-restart driver
/// compare the best of both basins instead of betting on one.
pub fn random_configuration(
    source: &SourceModel,
    k: usize,
    rng: &mut RngStream,
) -> Result<CombinerConfig> {
    if k > MAX_COMPARATORS {
        return Err(Error::TooManyComparators { got: k });
    }
    loop {
        let structured = rng.uniform_f64() < 0.5;
        let config = if structured {
            structured_configuration(source, k, rng)?
        } else {
            isotropic_configuration(source, k, rng)?
        };
        // Continuous jitter makes degeneracy a measure-zero event, but the
        // contract promises general position, so verify and redraw.
        if crate::geometry::is_general_position(&config) {
            return Ok(config);
        }
    }
}

fn isotropic_configuration(
    source: &SourceModel,
    k: usize,
    rng: &mut RngStream,
) -> Result<CombinerConfig> {
    let d = source.dim();
    let mut hyperplanes = Vec::with_capacity(k);
    for _ in 0..k {
        let normal = random_unit_normal(d, rng);
        let offset = match source.kind() {
            SourceKind::GaussianStd => rng.standard_normal(),
            SourceKind::UniformUnit => {
                let mut acc = 0.0;
                for v in &normal {
                    acc += v * rng.uniform_f64();
                }
                -acc
            }
        };
        hyperplanes.push(Hyperplane::from_unit(normal, offset)?);
    }
    CombinerConfig::new(d, hyperplanes)
}

/// Near-axis cuts at jittered empirical marginal quantiles.
///
/// The `k` comparators are split across the `d` axes as evenly as the
/// remainder allows (surplus axes chosen by random permutation). An axis
/// holding `s` cuts places them at the `1/(s+1), …, s/(s+1)` empirical
/// quantiles of a fresh pilot sample of that coordinate's marginal, so the
/// cells start with comparable probability mass; pilot noise supplies the
/// jitter that keeps restarts diverse. Normals are sign-flipped axis
/// vectors with a small Gaussian tilt, which keeps the arrangement in
/// general position without changing which basin it starts in.
fn structured_configuration(
    source: &SourceModel,
    k: usize,
    rng: &mut RngStream,
) -> Result<CombinerConfig> {
    let d = source.dim();
    let base = k / d;
    let surplus = k % d;
    let mut axes: Vec<usize> = (0..d).collect();
    // Fisher-Yates; only the first `surplus` entries matter.
    for i in 0..d.saturating_sub(1) {
        let j = i + rng.index(d - i);
        axes.swap(i, j);
    }
    let mut cuts_per_axis = vec![base; d];
    for &axis in axes.iter().take(surplus) {
        cuts_per_axis[axis] += 1;
    }

    let center = match source.kind() {
        SourceKind::GaussianStd => 0.0,
        SourceKind::UniformUnit => 0.5,
    };
    let mut hyperplanes = Vec::with_capacity(k);
    for (axis, &cuts) in cuts_per_axis.iter().enumerate() {
        if cuts == 0 {
            continue;
        }
        let mut pilot: Vec<f64> = (0..STRUCTURED_PILOT)
            .map(|_| match source.kind() {
                SourceKind::GaussianStd => rng.standard_normal(),
                SourceKind::UniformUnit => rng.uniform_f64(),
            })
            .collect();
        pilot.sort_by(|a, b| a.total_cmp(b));
        for i in 0..cuts {
            let q = (i + 1) as f64 / (cuts + 1) as f64;
            let rank = (q * (STRUCTURED_PILOT - 1) as f64).round() as usize;
            let threshold = pilot[rank];
            let sign = if rng.uniform_f64() < 0.5 { 1.0 } else { -1.0 };
            let mut v: Vec<f64> = (0..d)
                .map(|_| STRUCTURED_TILT * rng.standard_normal())
                .collect();
            v[axis] += sign;
            // Through the point whose `axis` coordinate is the threshold
            // and whose remaining coordinates sit at the source center.
            let mut t = 0.0;
            for (c, vc) in v.iter().enumerate() {
                t -= vc * if c == axis { threshold } else { center };
            }
            hyperplanes.push(Hyperplane::new(v, t)?);
        }
    }
    CombinerConfig::new(d, hyperplanes)
}

fn random_unit_normal(d: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Candidates that perturb every hyperplane at once: isotropic Gaussian
/// jitter of the annealed scale on each normal (then renormalized) and on
/// each offset.
pub fn global_update(
    config: &CombinerConfig,
    iteration: usize,
    params: &OptimizerParams,
    rng: &mut RngStream,
) -> Vec<CombinerConfig> {
    let scale = params.step_scale(iteration);
    (0..params.candidates_per_iteration)
        .map(|_| {
            let hyperplanes = config
                .hyperplanes()
                .iter()
                .map(|h| loop {
                    let v: Vec<f64> = h
                        .normal()
                        .iter()
                        .map(|a| a + scale * rng.standard_normal())
                        .collect();
                    let t = h.offset() + scale * rng.standard_normal();
                    // A perturbation canceling the normal exactly has
                    // measure zero; redraw on that degenerate case.
                    if let Ok(h) = Hyperplane::new(v, t) {
                        break h;
                    }
                })
                .collect();
            CombinerConfig::new(config.dim(), hyperplanes)
                .expect("perturbation preserves dimensions")
        })
        .collect()
}

/// Candidates that move exactly one coordinate of one hyperplane, chosen
/// uniformly at random.
///
/// When the offset is chosen, candidates form a deterministic two-sided
/// ladder spanning ±2 spreads of the codebook centroids' projections onto
/// the hyperplane normal: the coarse rungs slide the hyperplane across
/// whole cells, the fine rungs polish its position. When a normal
/// coordinate is chosen, each candidate jitters that coordinate with a
/// ladder of scales and recanonicalizes.
pub fn local_update(
    config: &CombinerConfig,
    codebook: &Codebook,
    params: &OptimizerParams,
    rng: &mut RngStream,
) -> Result<Vec<CombinerConfig>> {
    let k = config.k();
    if k == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let d = config.dim();
    let j = rng.index(k);
    let coord = rng.index(d + 1);
    let h = config.hyperplane(j);
    let count = params.candidates_per_iteration;
    let mut out = Vec::with_capacity(count);
    if coord == d {
        let spread = centroid_projection_spread(h, codebook);
        for delta in two_sided_ladder(count, 2.0 * spread, OFFSET_LADDER_RATIO) {
            let moved = Hyperplane::from_unit(h.normal().to_vec(), h.offset() + delta)?;
            out.push(replace_hyperplane(config, j, moved));
        }
    } else {
        for sigma in two_sided_ladder(count, NORMAL_JITTER_COARSE, NORMAL_JITTER_RATIO) {
            let moved = loop {
                let mut v = h.normal().to_vec();
                v[coord] += sigma.abs() * rng.standard_normal();
                if let Ok(h) = Hyperplane::new(v, h.offset()) {
                    break h;
                }
            };
            out.push(replace_hyperplane(config, j, moved));
        }
    }
    Ok(out)
}

/// Standard deviation of the codebook centroids' signed projections onto
/// the hyperplane normal; the natural length scale for sliding the
/// hyperplane between cells. Falls back to 1 for degenerate codebooks.
fn centroid_projection_spread(h: &Hyperplane, codebook: &Codebook) -> f64 {
    let n = codebook.len();
    if n < 2 {
        return 1.0;
    }
    let projections: Vec<f64> = codebook
        .iter()
        .map(|(_, e)| h.normal().iter().zip(&e.centroid).map(|(a, b)| a * b).sum())
        .collect();
    let mean: f64 = projections.iter().sum::<f64>() / n as f64;
    let var: f64 =
        projections.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd.is_finite() && sd > 1e-9 {
        sd
    } else {
        1.0
    }
}

fn replace_hyperplane(config: &CombinerConfig, j: usize, h: Hyperplane) -> CombinerConfig {
    let mut hyperplanes = config.hyperplanes().to_vec();
    hyperplanes[j] = h;
    CombinerConfig::new(config.dim(), hyperplanes).expect("dimension preserved")
}

/// One full optimization run from a random start.
///
/// Per 1-indexed iteration `i`: a global update fires with probability
/// `exp(-decay·i)`, a local update otherwise; every candidate gets fresh
/// centroids and is scored against the incumbent on the shared evaluation
/// stream; the best strictly improving candidate (if any) is accepted. The
/// returned design re-estimates the winner's centroids and distortion at
/// 4× the sample budget to shave the winner's-curse bias off the reported
/// value.
pub fn optimize(
    source: &SourceModel,
    k: usize,
    params: &OptimizerParams,
    rng: &RngStream,
) -> Result<(QuantizerDesign, OptimizationTrace)> {
    params.validate()?;
    if k > MAX_COMPARATORS {
        return Err(Error::TooManyComparators { got: k });
    }

    let mut decisions = rng.substream(TAG_DECISIONS);
    let centroid_root = rng.substream(TAG_CENTROIDS);
    let eval_root = rng.substream(TAG_EVAL);
    let est = &params.estimation;

    // Scoring always replays the same stream from its start: common random
    // numbers across every candidate, every iteration, and the incumbent.
    let shared_score = |config: &CombinerConfig, codebook: &Codebook| -> f64 {
        let mut eval = eval_root.substream(0);
        config_mse(config, codebook, source, est.n_points_mse, &mut eval).value
    };

    let mut config = random_configuration(source, k, &mut rng.substream(TAG_INIT))?;
    let mut centroid_calls: u64 = 0;
    let next_centroid_stream = |calls: &mut u64| {
        let s = centroid_root.substream(*calls);
        *calls += 1;
        s
    };
    let mut codebook = estimate_centroids(
        &config,
        source,
        est,
        &mut next_centroid_stream(&mut centroid_calls),
    )?;
    let mut value = shared_score(&config, &codebook);

    let mut records = Vec::with_capacity(params.total_iterations);
    // With no hyperplane there is nothing to search; skip straight to the
    // final re-estimation.
    if k > 0 {
        for i in 1..=params.total_iterations {
            let global = decisions.uniform_f64() < params.global_probability(i);
            let candidates = if global {
                global_update(&config, i, params, &mut decisions)
            } else {
                local_update(&config, &codebook, params, &mut decisions)?
            };

            let mut best: Option<(CombinerConfig, Codebook, f64)> = None;
            for candidate in candidates {
                let cb = estimate_centroids(
                    &candidate,
                    source,
                    est,
                    &mut next_centroid_stream(&mut centroid_calls),
                )?;
                let v = shared_score(&candidate, &cb);
                if best.as_ref().is_none_or(|(_, _, b)| v < *b) {
                    best = Some((candidate, cb, v));
                }
            }
            if let Some((c, cb, v)) = best {
                if v < value {
                    config = c;
                    codebook = cb;
                    value = v;
                }
            }
            records.push(IterationRecord {
                iteration: i,
                accepted_mse: value,
                update_kind: if global { UpdateKind::Global } else { UpdateKind::Local },
                occupied_regions: codebook.len(),
            });
        }
    }

    let high_precision = est.scaled(4);
    let final_codebook = estimate_centroids(
        &config,
        source,
        &high_precision,
        &mut rng.substream(TAG_FINAL_CENTROIDS),
    )?;
    let final_mse = config_mse(
        &config,
        &final_codebook,
        source,
        high_precision.n_points_mse,
        &mut rng.substream(TAG_FINAL_EVAL),
    );
    let design = QuantizerDesign::new(
        config,
        final_codebook,
        *source,
        final_mse.value,
        Provenance {
            seed: rng.seed(),
            iterations: params.total_iterations,
            restarts: 1,
        },
    )?;
    Ok((design, OptimizationTrace { records }))
}

/// Outcome of one restart, kept for the local-minima diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartRecord {
    pub restart: usize,
    pub mse_estimate: f64,
    pub occupied_regions: usize,
}

/// Best design over all restarts, with the per-restart records.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiRestartOutcome {
    pub best: QuantizerDesign,
    pub restarts: Vec<RestartRecord>,
}

/// Run [`optimize`] from `params.restarts` independent starting streams
/// and keep the design with the lowest re-estimated distortion.
///
/// Restart 0 uses the caller's stream directly, so a single restart is
/// bit-for-bit identical to calling [`optimize`].
pub fn multi_restart(
    source: &SourceModel,
    k: usize,
    params: &OptimizerParams,
    rng: &RngStream,
) -> Result<MultiRestartOutcome> {
    params.validate()?;
    let mut best: Option<QuantizerDesign> = None;
    let mut restarts = Vec::with_capacity(params.restarts);
    for r in 0..params.restarts {
        let (design, _) = if r == 0 {
            optimize(source, k, params, rng)?
        } else {
            optimize(source, k, params, &rng.substream(TAG_RESTART_BASE + r as u64))?
        };
        restarts.push(RestartRecord {
            restart: r,
            mse_estimate: design.mse_estimate(),
            occupied_regions: design.codebook().len(),
        });
        if best
            .as_ref()
            .is_none_or(|b| design.mse_estimate() < b.mse_estimate())
        {
            best = Some(design);
        }
    }
    let best = best
        .expect("restarts >= 1")
        .with_restarts(params.restarts);
    Ok(MultiRestartOutcome { best, restarts })
}
