//! Max-Lloyd reference quantizers: the deterministic scalar fixed point,
//! a generalized (vector) Lloyd codebook with a matched number of
//! reconstruction points, and the best axis-aligned product quantizer with
//! a matched comparator budget.
//!
//! The scalar quantizer is computed by 1-D quadrature rather than Monte
//! Carlo, so the matched-comparator reference carries no sampling noise of
//! its own; both baselines are additionally evaluated by Monte Carlo on
//! common streams when compared against a designed quantizer.

use crate::error::{Error, Result};
use crate::estimation::{finish_estimate, EstimationParams, MseEstimate};
use crate::source::{RngStream, SourceKind, SourceModel};

/// Default iteration cap for the scalar Lloyd fixed point.
pub const DEFAULT_LLOYD_MAX_ITER: usize = 10_000;
/// Default convergence tolerance on level movement.
pub const DEFAULT_LLOYD_TOL: f64 = 1e-9;

/// Integration support per source marginal. The Gaussian tail beyond 8.5
/// carries mass below 1e-17, far under every tolerance used here.
fn support(kind: SourceKind) -> (f64, f64) {
    match kind {
        SourceKind::GaussianStd => (-8.5, 8.5),
        SourceKind::UniformUnit => (0.0, 1.0),
    }
}

/// Composite Simpson rule with `n` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Subintervals per cell so a full sweep keeps at least ~10^4 nodes.
fn nodes_per_cell(n_cells: usize) -> usize {
    let n = (20_000 / n_cells.max(1)).max(512);
    n + (n & 1)
}

/// Probability mass and first moment of the marginal over `[a, b]`.
fn cell_moments(kind: SourceKind, a: f64, b: f64, nodes: usize) -> (f64, f64) {
    (
        simpson(|x| kind.marginal_pdf(x), a, b, nodes),
        simpson(|x| x * kind.marginal_pdf(x), a, b, nodes),
    )
}

/// A scalar quantizer: `L` strictly increasing thresholds interleaved with
/// `L + 1` strictly increasing reconstruction levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarQuantizer {
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

impl ScalarQuantizer {
    pub fn new(thresholds: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || thresholds.len() + 1 != levels.len() {
            return Err(Error::InvalidParameter(format!(
                "scalar quantizer needs L thresholds and L+1 levels, got {} and {}",
                thresholds.len(),
                levels.len()
            )));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&thresholds) || !increasing(&levels) {
            return Err(Error::InvalidParameter(
                "scalar quantizer thresholds and levels must be strictly increasing".into(),
            ));
        }
        for (i, &t) in thresholds.iter().enumerate() {
            if !(levels[i] < t && t < levels[i + 1]) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {i} does not interleave its neighboring levels"
                )));
            }
        }
        if thresholds.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "scalar quantizer values must be finite".into(),
            ));
        }
        Ok(Self { thresholds, levels })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Reconstruction of `x`; a point exactly on a threshold belongs to the
    /// upper cell, matching the global sign convention.
    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.thresholds.partition_point(|&t| t <= x)]
    }

    /// Exact (quadrature) distortion of this quantizer on the marginal.
    pub fn mse(&self, kind: SourceKind) -> f64 {
        let (lo, hi) = support(kind);
        let nodes = nodes_per_cell(self.levels.len());
        let mut total = 0.0;
        for (i, &level) in self.levels.iter().enumerate() {
            let a = if i == 0 { lo } else { self.thresholds[i - 1] };
            let b = if i + 1 == self.levels.len() { hi } else { self.thresholds[i] };
            total += simpson(
                |x| (x - level) * (x - level) * kind.marginal_pdf(x),
                a,
                b,
                nodes,
            );
        }
        total
    }
}

/// Scalar Max-Lloyd fixed point on the source marginal, by deterministic
/// quadrature.
///
/// Alternates levels ← cell conditional means and thresholds ← midpoints of
/// adjacent levels until the largest level movement drops below `tol` (or
/// `max_iter` passes). The returned thresholds are recomputed from the
/// final levels, so the midpoint identity holds to machine precision.
pub fn lloyd_max_scalar(
    kind: SourceKind,
    n_levels: usize,
    max_iter: usize,
    tol: f64,
) -> Result<ScalarQuantizer> {
    if n_levels == 0 {
        return Err(Error::InvalidParameter(
            "scalar quantizer needs at least one level".into(),
        ));
    }
    if max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter(
            "lloyd_max_scalar needs max_iter >= 1 and tol > 0".into(),
        ));
    }
    let (lo, hi) = support(kind);
    let nodes = nodes_per_cell(n_levels);

    // Evenly spaced initial levels across the distribution bulk. For the
    // uniform marginal this is already the fixed point.
    let (init_lo, init_hi) = match kind {
        SourceKind::GaussianStd => (-3.0, 3.0),
        SourceKind::UniformUnit => (0.0, 1.0),
    };
    let mut levels: Vec<f64> = (0..n_levels)
        .map(|i| init_lo + (init_hi - init_lo) * (i as f64 + 0.5) / n_levels as f64)
        .collect();

    for _ in 0..max_iter {
        let thresholds = midpoints(&levels);
        let mut delta = 0.0f64;
        let mut next = Vec::with_capacity(n_levels);
        for i in 0..n_levels {
            let a = if i == 0 { lo } else { thresholds[i - 1] };
            let b = if i + 1 == n_levels { hi } else { thresholds[i] };
            let (mass, first) = cell_moments(kind, a, b, nodes);
            // A cell squeezed outside the support keeps its level; adjacent
            // levels then collapse toward each other on later passes.
            let level = if mass > 1e-300 { first / mass } else { levels[i] };
            delta = delta.max((level - levels[i]).abs());
            next.push(level);
        }
        levels = next;
        if delta < tol {
            break;
        }
    }
    ScalarQuantizer::new(midpoints(&levels), levels)
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// An unstructured codebook of reconstruction points in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorCodebook {
    points: Vec<Vec<f64>>,
}

impl VectorCodebook {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match points.first() {
            Some(p) if !p.is_empty() => p.len(),
            _ => {
                return Err(Error::InvalidParameter(
                    "vector codebook needs at least one nonempty point".into(),
                ))
            }
        };
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "vector codebook points must be finite".into(),
                ));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                let d2: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2.sqrt() <= 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "vector codebook points {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Index of the nearest point to `x` (first index on exact ties).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        best
    }
}

/// Generalized Lloyd (k-means) codebook trained on a fixed Monte Carlo
/// sample set drawn from the source.
///
/// Seeding is k-means++; empty cells are re-seeded at the sample currently
/// farthest from its assigned point; iteration stops when the assignment
/// stabilizes or after `max_iter` passes.
pub fn generalized_lloyd_vector(
    source: &SourceModel,
    n_points: usize,
    samples: usize,
    max_iter: usize,
    rng: &mut RngStream,
) -> Result<VectorCodebook> {
    if n_points == 0 {
        return Err(Error::InvalidParameter(
            "generalized Lloyd needs at least one reconstruction point".into(),
        ));
    }
    if samples < 100 * n_points {
        return Err(Error::InvalidParameter(format!(
            "generalized Lloyd needs at least 100 samples per point ({} for {n_points} points), got {samples}",
            100 * n_points
        )));
    }
    let dim = source.dim();
    let mut data = vec![0.0; samples * dim];
    for row in data.chunks_mut(dim) {
        source.sample_into(rng, row);
    }
    let row = |s: usize| &data[s * dim..(s + 1) * dim];
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    // k-means++ seeding over the sample set.
    let mut centers: Vec<f64> = Vec::with_capacity(n_points * dim);
    centers.extend_from_slice(row(rng.index(samples)));
    let mut d2: Vec<f64> = (0..samples)
        .map(|s| dist2(row(s), &centers[0..dim]))
        .collect();
    for c in 1..n_points {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.uniform_f64() * total;
            let mut pick = samples - 1;
            for (s, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    pick = s;
                    break;
                }
            }
            pick
        } else {
            rng.index(samples)
        };
        let start = c * dim;
        centers.extend_from_slice(row(pick));
        for s in 0..samples {
            let nd = dist2(row(s), &centers[start..start + dim]);
            if nd < d2[s] {
                d2[s] = nd;
            }
        }
    }

    // Lloyd sweeps on the fixed sample set.
    let mut assign = vec![usize::MAX; samples];
    let mut point_d2 = vec![0.0f64; samples];
    let mut prev_mean_dist = f64::INFINITY;
    for _ in 0..max_iter {
        let mut changed = false;
        let mut total_dist = 0.0;
        for s in 0..samples {
            let x = row(s);
            let mut best = 0;
            let mut best_d2 = f64::INFINITY;
            for c in 0..n_points {
                let d = dist2(x, &centers[c * dim..(c + 1) * dim]);
                if d < best_d2 {
                    best_d2 = d;
                    best = c;
                }
            }
            if assign[s] != best {
                assign[s] = best;
                changed = true;
            }
            point_d2[s] = best_d2;
            total_dist += best_d2;
        }
        let mean_dist = total_dist / samples as f64;
        debug_assert!(
            mean_dist <= prev_mean_dist * (1.0 + 1e-12) + 1e-300,
            "Lloyd distortion increased: {prev_mean_dist} -> {mean_dist}"
        );
        prev_mean_dist = mean_dist;
        if !changed {
            break;
        }

        let mut counts = vec![0u64; n_points];
        let mut sums = vec![0.0; n_points * dim];
        for s in 0..samples {
            let c = assign[s];
            counts[c] += 1;
            for (acc, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(s)) {
                *acc += v;
            }
        }
        for c in 0..n_points {
            if counts[c] > 0 {
                for i in 0..dim {
                    centers[c * dim + i] = sums[c * dim + i] / counts[c] as f64;
                }
            } else {
                // Re-seed a starved cell at the sample farthest from its
                // assigned point; several starved cells take successive
                // farthest samples.
                let far = point_d2
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(s, _)| s)
                    .unwrap();
                centers[c * dim..(c + 1) * dim].copy_from_slice(row(far));
                point_d2[far] = -1.0;
            }
        }
    }

    VectorCodebook::new(centers.chunks(dim).map(|c| c.to_vec()).collect())
}

/// The best axis-aligned product quantizer spending `k` comparators in
/// total: per-dimension scalar Max-Lloyd quantizers with `k_i` thresholds,
/// minimized over all compositions `k_1 + … + k_d = k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductQuantizer {
    pub codebook: VectorCodebook,
    /// Thresholds spent per dimension.
    pub split: Vec<usize>,
    /// Exact (quadrature) distortion: the sum of per-dimension scalar MSEs.
    pub analytic_mse: f64,
}

/// Search every composition of the comparator budget across dimensions and
/// return the product quantizer with the lowest analytic distortion.
///
/// Compositions are scanned in descending lexicographic order and only a
/// strict improvement replaces the incumbent, so ties go to the
/// lexicographically greatest split — `(3,2)` over `(2,3)` for an iid
/// source with `d = 2, k = 5`.
pub fn matched_comparator_baseline(source: &SourceModel, k: usize) -> Result<ProductQuantizer> {
    let d = source.dim();
    let kind = source.kind();
    if compositions_count(k, d) > 1_000_000 {
        return Err(Error::InvalidParameter(format!(
            "composition search over {k} comparators in {d} dimensions is too large"
        )));
    }
    // Any single dimension spends at most k thresholds, so the k+1 scalar
    // quantizers cover every composition; each is cheap to fix-point.
    let mut quantizers = Vec::with_capacity(k + 1);
    let mut scalar_mse = Vec::with_capacity(k + 1);
    for thresholds in 0..=k {
        let q = lloyd_max_scalar(
            kind,
            thresholds + 1,
            DEFAULT_LLOYD_MAX_ITER,
            DEFAULT_LLOYD_TOL,
        )?;
        scalar_mse.push(q.mse(kind));
        quantizers.push(q);
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut cur = vec![0usize; d];
    // Depth-first over compositions, descending in each position, so ties
    // keep the first (lexicographically greatest) split.
    fn search(
        pos: usize,
        remaining: usize,
        partial: f64,
        scalar_mse: &[f64],
        cur: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if let Some((_, b)) = best {
            if partial >= *b {
                return;
            }
        }
        if pos + 1 == cur.len() {
            cur[pos] = remaining;
            let total = partial + scalar_mse[remaining];
            if best.as_ref().is_none_or(|(_, b)| total < *b) {
                *best = Some((cur.clone(), total));
            }
            return;
        }
        for first in (0..=remaining).rev() {
            cur[pos] = first;
            search(
                pos + 1,
                remaining - first,
                partial + scalar_mse[first],
                scalar_mse,
                cur,
                best,
            );
        }
    }
    search(0, k, 0.0, &scalar_mse, &mut cur, &mut best);
    let (split, analytic_mse) = best.expect("at least one composition exists");

    // Product codebook in lexicographic order, dimension 0 most significant.
    let mut points: Vec<Vec<f64>> = vec![Vec::with_capacity(d)];
    for &ki in &split {
        let levels = quantizers[ki].levels().to_vec();
        points = points
            .into_iter()
            .flat_map(|prefix| {
                levels.iter().map(move |&l| {
                    let mut p = prefix.clone();
                    p.push(l);
                    p
                })
            })
            .collect();
    }
    Ok(ProductQuantizer {
        codebook: VectorCodebook::new(points)?,
        split,
        analytic_mse,
    })
}

/// Number of compositions of `k` into `d` nonnegative parts, saturating.
fn compositions_count(k: usize, d: usize) -> u128 {
    // C(k + d - 1, d - 1)
    let n = (k + d - 1) as u128;
    let r = (d - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Nearest-neighbor Monte Carlo distortion of an arbitrary codebook,
/// putting baselines on the same footing as designed quantizers.
pub fn evaluate_codebook_mse(
    codebook: &VectorCodebook,
    source: &SourceModel,
    params: &EstimationParams,
    rng: &mut RngStream,
) -> Result<MseEstimate> {
    params.validate()?;
    if codebook.dim() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: codebook.dim(),
        });
    }
    let dim = source.dim();
    let mut x = vec![0.0; dim];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..params.n_points_mse {
        source.sample_into(rng, &mut x);
        let mut best = f64::INFINITY;
        for p in codebook.points() {
            let d2: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best {
                best = d2;
            }
        }
        sum += best;
        sum_sq += best * best;
    }
    Ok(finish_estimate(sum, sum_sq, params.n_points_mse))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS_LLOYD_MSE: [(usize, f64); 6] = [
        (1, 1.0),
        (2, 0.363380227632),
        (3, 0.190174039248),
        (4, 0.117481847829),
        (5, 0.079941127088),
        (6, 0.057977653715),
    ];

    #[test]
    fn gaussian_scalar_lloyd_matches_the_quadrature_fixed_points() {
        for &(n, expect) in &GAUSS_LLOYD_MSE {
            let q = lloyd_max_scalar(
                SourceKind::GaussianStd,
                n,
                DEFAULT_LLOYD_MAX_ITER,
                DEFAULT_LLOYD_TOL,
            )
            .unwrap();
            let mse = q.mse(SourceKind::GaussianStd);
            assert!(
                (mse - expect).abs() < 1e-6,
                "n={n}: {mse} vs {expect}"
            );
        }
    }

    #[test]
    fn one_bit_gaussian_levels_are_symmetric_around_zero() {
        let q = lloyd_max_scalar(SourceKind::GaussianStd, 2, 10_000, 1e-9).unwrap();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        assert!((q.levels()[0] + c).abs() < 1e-4);
        assert!((q.levels()[1] - c).abs() < 1e-4);
        assert!(q.thresholds()[0].abs() < 1e-9);
    }

    #[test]
    fn four_level_gaussian_levels_match_the_frozen_oracle() {
        let q = lloyd_max_scalar(SourceKind::GaussianStd, 4, 10_000, 1e-9).unwrap();
        let expect = [-1.5104176085, -0.4527800346, 0.4527800346, 1.5104176085];
        for (l, e) in q.levels().iter().zip(&expect) {
            assert!((l - e).abs() < 1e-4, "{l} vs {e}");
        }
    }

    #[test]
    fn uniform_scalar_lloyd_is_the_exact_grid() {
        for n in 1..=16usize {
            let q = lloyd_max_scalar(SourceKind::UniformUnit, n, 10_000, 1e-9).unwrap();
            for (i, &l) in q.levels().iter().enumerate() {
                let e = (2 * i + 1) as f64 / (2 * n) as f64;
                assert!((l - e).abs() < 1e-9, "n={n} level {i}: {l} vs {e}");
            }
            let mse = q.mse(SourceKind::UniformUnit);
            let expect = 1.0 / (12.0 * (n * n) as f64);
            assert!((mse - expect).abs() < 1e-9, "n={n}: {mse} vs {expect}");
        }
    }

    #[test]
    fn lloyd_fixed_point_residuals_hold_at_convergence() {
        for kind in [SourceKind::GaussianStd, SourceKind::UniformUnit] {
            let q = lloyd_max_scalar(kind, 6, 10_000, 1e-9).unwrap();
            for i in 0..q.thresholds().len() {
                let mid = 0.5 * (q.levels()[i] + q.levels()[i + 1]);
                assert!((q.thresholds()[i] - mid).abs() < 1e-8);
            }
            // Levels are the conditional means of their own cells.
            let (lo, hi) = support(kind);
            let nodes = nodes_per_cell(q.n_levels());
            for (i, &l) in q.levels().iter().enumerate() {
                let a = if i == 0 { lo } else { q.thresholds()[i - 1] };
                let b = if i + 1 == q.n_levels() { hi } else { q.thresholds()[i] };
                let (mass, first) = cell_moments(kind, a, b, nodes);
                assert!((l - first / mass).abs() < 1e-6, "{kind} level {i}");
            }
        }
    }

    #[test]
    fn scalar_quantize_uses_upper_cell_on_threshold_ties() {
        let q = ScalarQuantizer::new(vec![0.0], vec![-1.0, 1.0]).unwrap();
        assert_eq!(q.quantize(-0.5), -1.0);
        assert_eq!(q.quantize(0.0), 1.0);
        assert_eq!(q.quantize(2.0), 1.0);
    }

    #[test]
    fn scalar_quantizer_validation_rejects_malformed_inputs() {
        assert!(ScalarQuantizer::new(vec![], vec![]).is_err());
        assert!(ScalarQuantizer::new(vec![0.0], vec![1.0, -1.0]).is_err());
        assert!(ScalarQuantizer::new(vec![2.0], vec![-1.0, 1.0]).is_err());
        assert!(ScalarQuantizer::new(vec![0.0, 0.5], vec![-1.0, 1.0]).is_err());
        assert!(lloyd_max_scalar(SourceKind::GaussianStd, 0, 10, 1e-9).is_err());
    }

    #[test]
    fn single_point_lloyd_recovers_the_source_mean() {
        let source = SourceModel::new(SourceKind::GaussianStd, 2).unwrap();
        let mut rng = RngStream::new(31, 0);
        let cb = generalized_lloyd_vector(&source, 1, 20_000, 50, &mut rng).unwrap();
        assert_eq!(cb.len(), 1);
        assert!(cb.points()[0].iter().all(|c| c.abs() < 0.02));
    }

    #[test]
    fn two_point_lloyd_on_the_gaussian_line_matches_the_scalar_optimum() {
        let source = SourceModel::new(SourceKind::GaussianStd, 1).unwrap();
        let mut rng = RngStream::new(32, 0);
        let cb = generalized_lloyd_vector(&source, 2, 100_000, 100, &mut rng).unwrap();
        let mut pts: Vec<f64> = cb.points().iter().map(|p| p[0]).collect();
        pts.sort_by(f64::total_cmp);
        let c = (2.0 / std::f64::consts::PI).sqrt();
        assert!((pts[0] + c).abs() < 0.02, "{pts:?}");
        assert!((pts[1] - c).abs() < 0.02, "{pts:?}");
    }

    #[test]
    fn generalized_lloyd_validates_sample_budget() {
        let source = SourceModel::new(SourceKind::GaussianStd, 1).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(generalized_lloyd_vector(&source, 5, 499, 10, &mut rng).is_err());
        assert!(generalized_lloyd_vector(&source, 0, 1000, 10, &mut rng).is_err());
    }

    #[test]
    fn matched_comparator_split_prefers_earlier_dimensions_on_ties() {
        let source = SourceModel::new(SourceKind::GaussianStd, 2).unwrap();
        let even = matched_comparator_baseline(&source, 2).unwrap();
        assert_eq!(even.split, vec![1, 1]);
        assert_eq!(even.codebook.len(), 4);

        let odd = matched_comparator_baseline(&source, 5).unwrap();
        assert_eq!(odd.split, vec![3, 2]);
        assert_eq!(odd.codebook.len(), 12);
    }

    #[test]
    fn matched_comparator_analytic_mse_matches_the_scalar_sums() {
        let source = SourceModel::new(SourceKind::GaussianStd, 2).unwrap();
        // Best split of 5 comparators: 3 + 2 thresholds → 4- and 3-level
        // scalar quantizers.
        let q = matched_comparator_baseline(&source, 5).unwrap();
        assert!((q.analytic_mse - (0.117481847829 + 0.190174039248)).abs() < 1e-6);

        let uniform = SourceModel::new(SourceKind::UniformUnit, 2).unwrap();
        let q = matched_comparator_baseline(&uniform, 5).unwrap();
        assert_eq!(q.split, vec![3, 2]);
        let expect = 1.0 / 192.0 + 1.0 / 108.0;
        assert!((q.analytic_mse - expect).abs() < 1e-9, "{}", q.analytic_mse);
    }

    #[test]
    fn one_dimensional_budget_reduces_to_the_scalar_quantizer() {
        let source = SourceModel::new(SourceKind::GaussianStd, 1).unwrap();
        let q = matched_comparator_baseline(&source, 3).unwrap();
        assert_eq!(q.split, vec![3]);
        let scalar = lloyd_max_scalar(SourceKind::GaussianStd, 4, 10_000, 1e-9).unwrap();
        for (p, l) in q.codebook.points().iter().zip(scalar.levels()) {
            assert_eq!(p[0], *l);
        }
    }

    #[test]
    fn zero_budget_product_quantizer_is_the_source_mean() {
        let source = SourceModel::new(SourceKind::UniformUnit, 2).unwrap();
        let q = matched_comparator_baseline(&source, 0).unwrap();
        assert_eq!(q.split, vec![0, 0]);
        assert_eq!(q.codebook.len(), 1);
        assert!((q.analytic_mse - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn codebook_mse_evaluation_matches_known_values() {
        let params = EstimationParams {
            n_points_mse: 100_000,
            ..EstimationParams::default()
        };

        let gauss2 = SourceModel::new(SourceKind::GaussianStd, 2).unwrap();
        let single = VectorCodebook::new(vec![vec![0.0, 0.0]]).unwrap();
        let mut rng = RngStream::new(33, 0);
        let est = evaluate_codebook_mse(&single, &gauss2, &params, &mut rng).unwrap();
        assert!((est.value - 2.0).abs() < 0.02, "{}", est.value);

        let uniform1 = SourceModel::new(SourceKind::UniformUnit, 1).unwrap();
        let two = VectorCodebook::new(vec![vec![0.25], vec![0.75]]).unwrap();
        let mut rng = RngStream::new(33, 1);
        let est = evaluate_codebook_mse(&two, &uniform1, &params, &mut rng).unwrap();
        assert!((est.value - 1.0 / 48.0).abs() < 0.001, "{}", est.value);
    }

    #[test]
    fn vector_codebook_rejects_degenerate_point_sets() {
        assert!(VectorCodebook::new(vec![]).is_err());
        assert!(VectorCodebook::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(VectorCodebook::new(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(VectorCodebook::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn nearest_point_lookup_breaks_ties_toward_the_first_index() {
        let cb = VectorCodebook::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(cb.nearest(&[-0.9]), 0);
        assert_eq!(cb.nearest(&[0.9]), 1);
        assert_eq!(cb.nearest(&[0.0]), 0);
    }
}
