//! Affine hyperplane arrangements: sign-vector labeling, region-count
//! bounds, general-position testing, and separation structure.
//!
//! A configuration of `k` hyperplanes in `R^d` cuts the space into convex
//! regions, each identified by the vector of signs it induces on the `k`
//! affine forms. Everything downstream (encoding, centroid estimation, the
//! optimizer) works with these labels rather than with explicit cell
//! geometry; exact cell enumeration is deliberately out of scope and the
//! count bound [`region_count_upper_bound`] serves as the correctness oracle.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::{RngStream, SourceModel};

/// Region labels are packed into a `u64`, one bit per comparator.
pub const MAX_COMPARATORS: usize = 64;

/// Determinant magnitude below which a (row-normalized) matrix is treated
/// as singular; exact zero tests are meaningless in floating point.
const DET_TOL: f64 = 1e-9;

/// An affine hyperplane `{x : <normal, x> + offset = 0}` with unit normal.
///
/// Construction canonicalizes by dividing both the normal and the offset by
/// the (positive) Euclidean norm of the normal, which preserves the sign of
/// the affine form everywhere while removing a scale redundancy from the
/// optimizer's search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Build from an arbitrary nonzero normal, canonicalizing to unit norm.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty()
            || !offset.is_finite()
            || normal.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidNormal);
        }
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidNormal);
        }
        Ok(Self {
            normal: normal.into_iter().map(|v| v / norm).collect(),
            offset: offset / norm,
        })
    }

    /// Build from a normal that is already unit length (within 1e-9),
    /// keeping its bits unchanged so serialized designs round-trip exactly.
    pub fn from_unit(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty()
            || !offset.is_finite()
            || normal.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidNormal);
        }
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNormal);
        }
        Ok(Self { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The affine form `<normal, x> + offset`; positive on the +1 side.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.normal.len());
        let mut acc = self.offset;
        for (v, xi) in self.normal.iter().zip(x) {
            acc += v * xi;
        }
        acc
    }
}

/// An ordered arrangement of `k` hyperplanes in `R^dim`.
///
/// `k = 0` is legal and describes the trivial arrangement whose single
/// region is all of `R^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinerConfig {
    dim: usize,
    hyperplanes: Vec<Hyperplane>,
}

impl CombinerConfig {
    pub fn new(dim: usize, hyperplanes: Vec<Hyperplane>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "configuration dimension must be at least 1".into(),
            ));
        }
        if hyperplanes.len() > MAX_COMPARATORS {
            return Err(Error::TooManyComparators {
                got: hyperplanes.len(),
            });
        }
        for h in &hyperplanes {
            if h.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.dim(),
                });
            }
        }
        Ok(Self { dim, hyperplanes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of hyperplanes (comparators).
    pub fn k(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn hyperplanes(&self) -> &[Hyperplane] {
        &self.hyperplanes
    }

    pub fn hyperplane(&self, j: usize) -> &Hyperplane {
        &self.hyperplanes[j]
    }

    /// Row-major `k×dim` matrix of unit normals.
    pub fn normal_matrix(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k() * self.dim);
        for h in &self.hyperplanes {
            out.extend_from_slice(h.normal());
        }
        out
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.hyperplanes.iter().map(|h| h.offset()).collect()
    }

    /// Comparator word for `x`: bit `j` is set iff hyperplane `j` evaluates
    /// `>= 0` (the tie `0` maps to the +1 side). Hot path: no validation.
    pub fn sign_word(&self, x: &[f64]) -> u64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut bits = 0u64;
        for (j, h) in self.hyperplanes.iter().enumerate() {
            if h.eval(x) >= 0.0 {
                bits |= 1u64 << j;
            }
        }
        bits
    }

    /// Region label of `x`, validating the input dimension.
    pub fn sign_vector(&self, x: &[f64]) -> Result<RegionLabel> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(RegionLabel::from_word(self.k(), self.sign_word(x)))
    }
}

/// The sign vector identifying a region: `len` entries in {−1, +1}, packed
/// with coordinate `j` in bit `j` (set bit = +1).
///
/// Ordering is lexicographic over the sign sequence with coordinate 0 most
/// significant and −1 before +1, which fixes a canonical numbering of
/// regions wherever one is needed (codebook serialization, separation
/// matrices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegionLabel {
    len: u8,
    bits: u64,
}

impl RegionLabel {
    /// The empty label of the `k = 0` arrangement.
    pub fn empty() -> Self {
        Self { len: 0, bits: 0 }
    }

    /// Pack a label from a comparator word; bits at positions `>= len` are
    /// ignored.
    pub fn from_word(len: usize, word: u64) -> Self {
        debug_assert!(len <= MAX_COMPARATORS);
        let mask = if len == MAX_COMPARATORS {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        Self {
            len: len as u8,
            bits: word & mask,
        }
    }

    /// Build from explicit signs; every entry must be −1 or +1.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.len() > MAX_COMPARATORS {
            return Err(Error::TooManyComparators { got: signs.len() });
        }
        let mut bits = 0u64;
        for (j, &s) in signs.iter().enumerate() {
            match s {
                1 => bits |= 1u64 << j,
                -1 => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "label entry {j} is {s}, expected -1 or +1"
                    )))
                }
            }
        }
        Ok(Self {
            len: signs.len() as u8,
            bits,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Sign of coordinate `j` as ±1.
    pub fn sign(&self, j: usize) -> i8 {
        debug_assert!(j < self.len());
        if self.bits >> j & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len()).map(|j| self.sign(j)).collect()
    }

    /// The label with coordinate `j` flipped.
    pub fn flip(&self, j: usize) -> Self {
        debug_assert!(j < self.len());
        Self {
            len: self.len,
            bits: self.bits ^ (1u64 << j),
        }
    }

    /// Number of coordinates where the two labels differ.
    pub fn hamming(&self, other: &Self) -> u32 {
        debug_assert_eq!(self.len, other.len);
        (self.bits ^ other.bits).count_ones()
    }
}

impl Ord for RegionLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversing the word puts coordinate 0 in the most significant bit,
        // so integer order on the reversed bits is exactly lexicographic
        // order on the sign sequence with −1 (clear bit) first.
        self.len
            .cmp(&other.len)
            .then_with(|| self.bits.reverse_bits().cmp(&other.bits.reverse_bits()))
    }
}

impl PartialOrd for RegionLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for j in 0..self.len() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{:+}", self.sign(j))?;
        }
        write!(f, "]")
    }
}

impl Serialize for RegionLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.signs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegionLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let signs = Vec::<i8>::deserialize(d)?;
        RegionLabel::from_signs(&signs).map_err(serde::de::Error::custom)
    }
}

/// Upper bound on the number of regions `n` hyperplanes cut `R^m` into:
/// `Σ_{i=0}^{min(m,n)} C(n, i)`, attained exactly in general position.
///
/// Saturates at `u128::MAX` instead of overflowing for enormous inputs.
pub fn region_count_upper_bound(m: usize, n: usize) -> u128 {
    let top = m.min(n);
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for i in 0..=top {
        if i > 0 {
            // C(n, i) = C(n, i-1)·(n-i+1)/i; the division is exact.
            binom = match binom.checked_mul((n - i + 1) as u128) {
                Some(v) => v / i as u128,
                None => return u128::MAX,
            };
        }
        total = total.saturating_add(binom);
    }
    total
}

/// Determinant by LU elimination with partial pivoting; consumes the matrix.
fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Advance `idx` to the next r-combination of `0..n` in lexicographic
/// order; returns false when `idx` was the last one.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let r = idx.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if idx[i] < n - r + i {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whether the arrangement attains the maximal region count of
/// [`region_count_upper_bound`].
///
/// Checks, with tolerance [`DET_TOL`] on row-normalized determinants:
/// - `k >= d`: every `d×d` submatrix of the normal matrix is nonsingular;
/// - `k < d`: the `k` normals are linearly independent (Gram determinant),
///   the natural reading of the submatrix condition below full row count;
/// - `k > d`: no `d+1` hyperplanes share a common point, tested via the
///   determinant of the offset-augmented `(d+1)×(d+1)` row matrix.
pub fn is_general_position(config: &CombinerConfig) -> bool {
    let d = config.dim();
    let k = config.k();
    if k <= 1 {
        return true;
    }

    if k < d {
        let mut gram = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                gram[i][j] = dot(
                    config.hyperplane(i).normal(),
                    config.hyperplane(j).normal(),
                );
            }
        }
        if determinant(gram).abs() <= DET_TOL {
            return false;
        }
    } else {
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let m: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| config.hyperplane(i).normal().to_vec())
                .collect();
            if determinant(m).abs() <= DET_TOL {
                return false;
            }
            if !next_combination(&mut idx, k) {
                break;
            }
        }
    }

    if k > d {
        let mut idx: Vec<usize> = (0..=d).collect();
        loop {
            // Rows (v_i, t_i): with every d-subset of normals independent,
            // this matrix is singular exactly when the d+1 hyperplanes meet
            // in a common point. Rows are renormalized so the tolerance is
            // scale-free in the offsets.
            let m: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    let h = config.hyperplane(i);
                    let mut row = h.normal().to_vec();
                    row.push(h.offset());
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for v in &mut row {
                        *v /= norm;
                    }
                    row
                })
                .collect();
            if determinant(m).abs() <= DET_TOL {
                return false;
            }
            if !next_combination(&mut idx, k) {
                break;
            }
        }
    }

    true
}

/// Distinct region labels observed over `n_samples` draws from the source.
///
/// Sampled, not exact: regions carrying negligible source mass are
/// typically not observed, which is precisely the quantity the rest of the
/// pipeline cares about. The result never exceeds
/// [`region_count_upper_bound`]`(dim, k)`.
pub fn enumerate_regions_sampled(
    config: &CombinerConfig,
    source: &SourceModel,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<BTreeSet<RegionLabel>> {
    if source.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            got: source.dim(),
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "enumeration requires at least one sample".into(),
        ));
    }
    let k = config.k();
    let mut out = BTreeSet::new();
    let mut x = vec![0.0; config.dim()];
    for _ in 0..n_samples {
        source.sample_into(rng, &mut x);
        out.insert(RegionLabel::from_word(k, config.sign_word(&x)));
    }
    Ok(out)
}

/// Lower-triangular table of single-hyperplane adjacencies between regions.
///
/// Entry `(i, j)` for `i > j` holds the 1-indexed hyperplane separating
/// regions `i` and `j` when their labels differ in exactly one coordinate,
/// and 0 otherwise (several hyperplanes lie between non-adjacent cells, so
/// no single separator is recorded).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationMatrix {
    size: usize,
    rows: Vec<Vec<usize>>,
}

impl SeparationMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry for the pair `(i, j)`; requires `j < i < size()`.
    pub fn entry(&self, i: usize, j: usize) -> usize {
        assert!(j < i && i < self.size, "entry ({i},{j}) is not below the diagonal");
        self.rows[i][j]
    }
}

/// Build the separation matrix for an ordered list of distinct labels of
/// equal length.
pub fn separation_matrix(labels: &[RegionLabel]) -> Result<SeparationMatrix> {
    if let Some(first) = labels.first() {
        for l in labels {
            if l.len() != first.len() {
                return Err(Error::LabelLengthMismatch {
                    expected: first.len(),
                    got: l.len(),
                });
            }
        }
    }
    for i in 0..labels.len() {
        for j in 0..i {
            if labels[i] == labels[j] {
                return Err(Error::DuplicateLabel { first: j, second: i });
            }
        }
    }
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, li)| {
            labels[..i]
                .iter()
                .map(|lj| {
                    let diff = li.bits() ^ lj.bits();
                    if diff.count_ones() == 1 {
                        diff.trailing_zeros() as usize + 1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    Ok(SeparationMatrix {
        size: labels.len(),
        rows,
    })
}
