//! Shared oracles for the integration suites, implemented independently of
//! the library's own quadrature and estimation paths: a series-expansion
//! error function, closed-form Gaussian cell moments built on it, and a
//! from-scratch scalar Lloyd fixed-point solver. Each is validated against
//! externally computed reference values before anything else trusts it.

#![allow(dead_code)]

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const SQRT_2_OVER_PI: f64 = 0.7978845608028654;

/// erf via the non-alternating series
/// `erf(x) = (2/√π) e^{-x²} Σ_{n≥0} x^{2n+1} 2^n / (1·3⋯(2n+1))`,
/// accurate to ~1e-15 over the |x| ≤ 6 range used here.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x > 6.0 {
        return 1.0;
    }
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term.abs() > 1e-18 && n < 200 {
        n += 1;
        term *= 2.0 * x * x / (2.0 * f64::from(n) + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

/// Closed-form moments of the standard normal over `[a, b]`:
/// mass `Φ(b)−Φ(a)`, first moment `φ(a)−φ(b)`, and second moment
/// `mass + a·φ(a) − b·φ(b)`.
pub fn gaussian_cell_moments(a: f64, b: f64) -> (f64, f64, f64) {
    let mass = normal_cdf(b) - normal_cdf(a);
    let pa = if a.is_finite() { phi(a) } else { 0.0 };
    let pb = if b.is_finite() { phi(b) } else { 0.0 };
    let m1 = pa - pb;
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    let m2 = mass + apa - bpb;
    (mass, m1, m2)
}

/// Moments of Uniform[0,1] over `[a, b] ∩ [0, 1]`.
pub fn uniform_cell_moments(a: f64, b: f64) -> (f64, f64, f64) {
    let a = a.clamp(0.0, 1.0);
    let b = b.clamp(0.0, 1.0);
    if b <= a {
        return (0.0, 0.0, 0.0);
    }
    let mass = b - a;
    let m1 = (b * b - a * a) / 2.0;
    let m2 = (b * b * b - a * a * a) / 3.0;
    (mass, m1, m2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleSource {
    Gaussian,
    Uniform,
}

impl OracleSource {
    fn moments(self, a: f64, b: f64) -> (f64, f64, f64) {
        match self {
            OracleSource::Gaussian => gaussian_cell_moments(a, b),
            OracleSource::Uniform => uniform_cell_moments(a, b),
        }
    }

    fn initial_levels(self, n: usize) -> Vec<f64> {
        let (lo, hi) = match self {
            OracleSource::Gaussian => (-3.0, 3.0),
            OracleSource::Uniform => (0.0, 1.0),
        };
        (0..n)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
            .collect()
    }
}

/// Distortion of a level set with midpoint thresholds, from closed-form
/// cell moments: `Σ_cells ∫ (x − level)² p(x) dx`.
pub fn lloyd_oracle_mse(source: OracleSource, levels: &[f64]) -> f64 {
    let n = levels.len();
    let mut mse = 0.0;
    for (i, &level) in levels.iter().enumerate() {
        let a = if i == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (levels[i - 1] + levels[i])
        };
        let b = if i + 1 == n {
            f64::INFINITY
        } else {
            0.5 * (levels[i] + levels[i + 1])
        };
        let (m0, m1, m2) = source.moments(a, b);
        mse += m2 - 2.0 * level * m1 + level * level * m0;
    }
    mse
}

/// Independent scalar Lloyd fixed point: alternate midpoint thresholds and
/// conditional-mean levels until the levels stop moving. Returns the levels.
pub fn lloyd_oracle_levels(source: OracleSource, n: usize) -> Vec<f64> {
    let mut levels = source.initial_levels(n);
    for _ in 0..20_000 {
        let mut next = Vec::with_capacity(n);
        let mut max_delta: f64 = 0.0;
        for i in 0..n {
            let a = if i == 0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (levels[i - 1] + levels[i])
            };
            let b = if i + 1 == n {
                f64::INFINITY
            } else {
                0.5 * (levels[i] + levels[i + 1])
            };
            let (m0, m1, _) = source.moments(a, b);
            let level = if m0 > 1e-300 { m1 / m0 } else { levels[i] };
            max_delta = max_delta.max((level - levels[i]).abs());
            next.push(level);
        }
        levels = next;
        if max_delta < 1e-13 {
            break;
        }
    }
    levels
}

/// Best product-quantizer distortion for `k` comparators split across `d`
/// iid coordinates, from the scalar oracle alone (exhaustive composition
/// scan; small `k`, `d` only).
pub fn product_oracle_mse(source: OracleSource, d: usize, k: usize) -> f64 {
    let scalar: Vec<f64> = (0..=k)
        .map(|t| {
            let levels = lloyd_oracle_levels(source, t + 1);
            lloyd_oracle_mse(source, &levels)
        })
        .collect();
    fn best(pos: usize, d: usize, remaining: usize, scalar: &[f64]) -> f64 {
        if pos + 1 == d {
            return scalar[remaining];
        }
        (0..=remaining)
            .map(|take| scalar[take] + best(pos + 1, d, remaining - take, scalar))
            .fold(f64::INFINITY, f64::min)
    }
    best(0, d, k, &scalar)
}

/// Reference values computed with an independent numerical stack before
/// the build; every oracle above must reproduce them or the whole suite is
/// untrustworthy.
pub fn self_check() {
    // erf anchors.
    let erf_anchors = [
        (0.5, 0.5204998778130465),
        (1.0, 0.8427007929497149),
        (2.0, 0.9953222650189527),
        (3.0, 0.9999779095030014),
    ];
    for (x, want) in erf_anchors {
        assert!((erf(x) - want).abs() < 1e-14, "erf({x})");
    }

    // Conditional means of the standard normal.
    let (m0, m1, _) = gaussian_cell_moments(0.0, 1.0);
    assert!((m1 / m0 - 0.45986222928642656).abs() < 1e-13);
    let (m0, m1, _) = gaussian_cell_moments(1.0, f64::INFINITY);
    assert!((m1 / m0 - 1.525135276160981).abs() < 1e-13);

    // Scalar Lloyd-Max distortion, standard normal, N = 1..6.
    let gauss_mse = [
        (1, 1.0),
        (2, 0.3633802276324186),
        (3, 0.190174039248),
        (4, 0.117481847829),
        (5, 0.079941127088),
        (6, 0.057977653715),
    ];
    for (n, want) in gauss_mse {
        let got = lloyd_oracle_mse(OracleSource::Gaussian, &lloyd_oracle_levels(OracleSource::Gaussian, n));
        assert!((got - want).abs() < 1e-9, "gaussian N={n}: got {got}, want {want}");
    }

    // Two-level normal quantizer: levels ±√(2/π).
    let two = lloyd_oracle_levels(OracleSource::Gaussian, 2);
    assert!((two[0] + SQRT_2_OVER_PI).abs() < 1e-10);
    assert!((two[1] - SQRT_2_OVER_PI).abs() < 1e-10);

    // Uniform N-level quantizer is the regular grid with MSE 1/(12N²).
    for n in 1..=8usize {
        let levels = lloyd_oracle_levels(OracleSource::Uniform, n);
        for (i, l) in levels.iter().enumerate() {
            let want = (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
            assert!((l - want).abs() < 1e-10, "uniform N={n} level {i}");
        }
        let mse = lloyd_oracle_mse(OracleSource::Uniform, &levels);
        assert!((mse - 1.0 / (12.0 * (n * n) as f64)).abs() < 1e-12);
    }

    // Product splits at d=2, k=5: Gaussian 4+2 levels, uniform likewise.
    let gauss_product = product_oracle_mse(OracleSource::Gaussian, 2, 5);
    assert!((gauss_product - 0.307655887).abs() < 1e-6, "{gauss_product}");
    let unif_product = product_oracle_mse(OracleSource::Uniform, 2, 5);
    assert!((unif_product - (1.0 / 192.0 + 1.0 / 108.0)).abs() < 1e-9, "{unif_product}");
}
