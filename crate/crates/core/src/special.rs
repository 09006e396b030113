//! Scalar normal-distribution primitives, extreme-value sequences, and the
//! Gumbel family used throughout the crate.
//!
//! Everything here is pure scalar math with hard accuracy targets:
//!
//! * `normal_cdf` / `normal_cdf_upper`: relative error a few ulp over the
//!   whole representable range (rational erfc approximations, three regimes).
//! * `log_normal_cdf` / `log_normal_cdf_upper`: usable far into the tail
//!   (`x = -300` and beyond), where the plain CDF has long underflowed.
//!   Needed because survival probabilities enter downstream code as
//!   `n · log Φ(x)` with `n` up to 10⁹ and beyond.
//! * `inverse_normal_cdf` / `inverse_normal_cdf_upper`: rational initial
//!   guess polished with two Newton steps against the CDF implemented here,
//!   so that round-tripping reproduces the probability to ~1 ulp. The
//!   complementary entry point takes the tail mass directly and never forms
//!   `1 - p`, keeping full relative accuracy for tail arguments.

use crate::error::{Error, Result};
use std::fmt;

/// ln √(2π), the normalizing constant of the standard normal density.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;
/// 1/√(2π).
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_68;
/// 1/√2.
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// ---------------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------------

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// ln φ(x); finite for all finite `x`, unlike `normal_pdf(x).ln()`.
#[inline]
pub fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

// ---------------------------------------------------------------------------
// erfc (three-regime rational approximation, ~1e-16 relative)
// ---------------------------------------------------------------------------

/// Complementary error function on the whole real line.
///
/// Classic three-regime rational-minimax evaluation: small arguments via an
/// erf rational, the mid range and far tail via scaled-erfc rationals with
/// the `exp(-x²)` factor split into an exact part and a small correction so
/// the exponential itself does not lose precision.
fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        // erf regime; return 1 - erf.
        return 1.0 - erf_small(x);
    } else if y <= 4.0 {
        const C: [f64; 9] = [
            5.641_884_969_886_700_89e-1,
            8.883_149_794_388_375_94,
            6.611_919_063_714_162_95e1,
            2.986_351_381_974_001_31e2,
            8.819_522_212_417_690_90e2,
            1.712_047_612_634_070_58e3,
            2.051_078_377_826_071_47e3,
            1.230_339_354_797_997_25e3,
            2.153_115_354_744_038_46e-8,
        ];
        const D: [f64; 8] = [
            1.574_492_611_070_983_47e1,
            1.176_939_508_913_124_99e2,
            5.371_811_018_620_098_58e2,
            1.621_389_574_566_690_19e3,
            3.290_799_235_733_459_63e3,
            4.362_619_090_143_247_16e3,
            3.439_367_674_143_721_64e3,
            1.230_339_354_803_749_42e3,
        ];
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        scaled_exp_sq(y) * (num + C[7]) / (den + D[7])
    } else if y < 26.65 {
        const P: [f64; 6] = [
            3.053_266_349_612_323_44e-1,
            3.603_448_999_498_044_39e-1,
            1.257_817_261_112_292_46e-1,
            1.608_378_514_874_227_66e-2,
            6.587_491_615_298_378_03e-4,
            1.631_538_713_730_209_78e-2,
        ];
        const Q: [f64; 5] = [
            2.568_520_192_289_822_42,
            1.872_952_849_923_460_47,
            5.279_051_029_514_284_12e-1,
            6.051_834_131_244_131_91e-2,
            2.335_204_976_268_691_85e-3,
        ];
        const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_562_87e-1;
        let inv_sq = 1.0 / (y * y);
        let mut num = P[5] * inv_sq;
        let mut den = inv_sq;
        for i in 0..4 {
            num = (num + P[i]) * inv_sq;
            den = (den + Q[i]) * inv_sq;
        }
        let r = inv_sq * (num + P[4]) / (den + Q[4]);
        scaled_exp_sq(y) * (FRAC_1_SQRT_PI - r) / y
    } else {
        // erfc underflows below the smallest subnormal.
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// erf(x) for |x| ≤ 0.46875.
fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_60,
        1.138_641_541_510_501_56e2,
        3.774_852_376_853_020_21e2,
        3.209_377_589_138_469_47e3,
        1.857_777_061_846_031_53e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_09e1,
        2.440_246_379_344_441_73e2,
        1.282_616_526_077_372_28e3,
        2.844_236_833_439_170_62e3,
    ];
    let z = x * x;
    let mut num = A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + A[i]) * z;
        den = (den + B[i]) * z;
    }
    x * (num + A[3]) / (den + B[3])
}

/// exp(-y²) evaluated as exp(-hi²)·exp(-(y-hi)(y+hi)) with `hi` a multiple of
/// 1/16, which keeps the argument of each exponential exactly representable
/// enough to avoid the ~y·ulp(y²) relative error of the naive form.
#[inline]
fn scaled_exp_sq(y: f64) -> f64 {
    let hi = (y * 16.0).trunc() / 16.0;
    let del = (y - hi) * (y + hi);
    (-hi * hi).exp() * (-del).exp()
}

// ---------------------------------------------------------------------------
// Normal CDF and log-CDF
// ---------------------------------------------------------------------------

/// Standard normal CDF Φ(x). Underflows to 0 below x ≈ -37.7.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail Φ̄(x) = 1 - Φ(x) = Φ(-x), computed without forming `1 - p`.
#[inline]
pub fn normal_cdf_upper(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// ln Φ(x), finite and accurate for all finite `x` (absolute error ~1e-14
/// even at x = -300, where Φ(x) ≈ 10^-19547 has no floating representation).
pub fn log_normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        // Φ̄(x) ≤ 1/2, so ln(1 - Φ̄) is fully accurate.
        (-normal_cdf_upper(x)).ln_1p()
    } else if x > -34.0 {
        // Φ(x) is a normal float with ~1 ulp relative error; its log has the
        // same ABSOLUTE error, which is what matters downstream.
        normal_cdf(x).ln()
    } else {
        // Mills-ratio continued fraction: Φ(x) = φ(x)·R(|x|) with
        // R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...)))).
        log_normal_pdf(x) + mills_ratio(-x).ln()
    }
}

/// ln Φ̄(x) = ln Φ(-x).
#[inline]
pub fn log_normal_cdf_upper(x: f64) -> f64 {
    log_normal_cdf(-x)
}

/// Mills ratio Φ̄(t)/φ(t) for large t via its continued fraction
/// (backward evaluation, depth chosen for t ≥ 34 where ~12 levels give
/// full double precision).
fn mills_ratio(t: f64) -> f64 {
    debug_assert!(t >= 30.0);
    let mut f = 0.0;
    for j in (1..=16u32).rev() {
        f = f64::from(j) / (t + f);
    }
    1.0 / (t + f)
}

// ---------------------------------------------------------------------------
// Inverse normal CDF
// ---------------------------------------------------------------------------

/// Φ⁻¹(p) for p ∈ (0,1). For probabilities very close to 1, prefer
/// [`inverse_normal_cdf_upper`] with the tail mass to retain relative
/// accuracy (this entry forms `1 - p` internally when p > 1/2).
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "inverse_normal_cdf requires p in (0,1), got {p}"
        )));
    }
    Ok(if p <= 0.5 {
        -quantile_upper_core(p)
    } else {
        quantile_upper_core(1.0 - p)
    })
}

/// Φ̄⁻¹(q): the x with upper-tail mass q, for q ∈ (0,1). Accurate to ~1 ulp
/// of the tail probability down to q ≈ 5e-324.
pub fn inverse_normal_cdf_upper(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "inverse_normal_cdf_upper requires q in (0,1), got {q}"
        )));
    }
    Ok(quantile_upper(q))
}

/// Unchecked inner quantile for callers that guarantee q ∈ (0,1)
/// (hot simulation loops).
#[inline]
pub(crate) fn quantile_upper(q: f64) -> f64 {
    if q <= 0.5 {
        quantile_upper_core(q)
    } else {
        -quantile_upper_core(1.0 - q)
    }
}

/// Lower-tail unchecked quantile for uniforms from an open interval.
#[inline]
pub(crate) fn quantile(p: f64) -> f64 {
    -quantile_upper(p)
}

/// x ≥ 0 with Φ̄(x) = q, for q ∈ (0, 1/2]: rational initial estimate
/// (~1e-9 relative) then two Newton steps on Φ̄, each phrased on the tail so
/// no cancellation occurs: x ← x + (Φ̄(x) - q)/φ(x).
fn quantile_upper_core(q: f64) -> f64 {
    debug_assert!(q > 0.0 && q <= 0.5);
    let mut x = if q < 0.02425 {
        rational_tail_estimate(q)
    } else {
        rational_central_estimate(q)
    };
    // Two Newton polish steps. φ underflows only for x > 38.6, i.e.
    // q < 3e-324: nothing representable reaches that on the tail side.
    for _ in 0..2 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        x += (normal_cdf_upper(x) - q) / pdf;
    }
    x
}

/// Rational estimate of Φ̄⁻¹(q) in the tail q < 0.02425 (≈1e-9 relative).
fn rational_tail_estimate(q: f64) -> f64 {
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let t = (-2.0 * q.ln()).sqrt();
    let num = ((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5];
    let den = (((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0;
    // The classic form yields the LOWER quantile of probability q (negative);
    // the upper quantile is its negation.
    -(num / den)
}

/// Rational estimate in the central region 0.02425 ≤ q ≤ 0.5.
fn rational_central_estimate(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    let u = q - 0.5;
    let r = u * u;
    let num = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u;
    let den = ((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0;
    // Lower quantile of probability q; negate for the upper quantile.
    -(num / den)
}

// ---------------------------------------------------------------------------
// Extreme-value sequences
// ---------------------------------------------------------------------------

/// Exact upper 1/n normal quantile a_n = Φ̄⁻¹(1/n), the centering sequence of
/// the maximum of n independent standard normals. Requires n ≥ 2 (a_2 = 0;
/// a_n > 0 for n ≥ 3).
pub fn a_n_exact(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("a_n_exact requires n >= 2, got {n}")));
    }
    inverse_normal_cdf_upper(1.0 / n as f64)
}

/// Closed-form approximation √(2 ln n) - (ln ln n + ln 4π)/(2√(2 ln n)).
/// Requires n ≥ 3 (ln ln n needs ln n > 0 and the expansion is vacuous
/// before that). Overestimates `a_n_exact` by O(1/log n).
pub fn a_n_asymptotic(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain(format!(
            "a_n_asymptotic requires n >= 3, got {n}"
        )));
    }
    let ln_n = (n as f64).ln();
    let s = (2.0 * ln_n).sqrt();
    const LN_4PI: f64 = 2.531_024_246_969_290_8;
    Ok(s - (ln_n.ln() + LN_4PI) / (2.0 * s))
}

/// Centering/scaling pair for the Gumbel limit of normal maxima:
/// location `a_n = Φ̄⁻¹(1/n)` and scale `b_n = 1/a_n`.
///
/// `b_2` is +∞ (a_2 = 0); the pair is primarily meaningful for n ≥ 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeSequenceTerm {
    /// Sample count n ≥ 2.
    pub n: u64,
    /// Centering constant Φ̄⁻¹(1/n).
    pub a_n: f64,
    /// Scaling constant 1/a_n.
    pub b_n: f64,
}

impl ExtremeSequenceTerm {
    /// Build the term for a given n ≥ 2.
    pub fn new(n: u64) -> Result<Self> {
        let a_n = a_n_exact(n)?;
        Ok(ExtremeSequenceTerm { n, a_n, b_n: 1.0 / a_n })
    }
}

// ---------------------------------------------------------------------------
// Gumbel family
// ---------------------------------------------------------------------------

/// Standard Gumbel CDF H(x) = exp(-e^{-x}).
#[inline]
pub fn gumbel_h(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Tail-family member H^{(k)}(x) = H(x)·Σ_{i<k} e^{-ix}/i!, the limiting
/// probability that fewer than k of the top order statistics exceed a Gumbel
/// level. Requires k ≥ 1; H^{(1)} = H. Monotone in x, in [0,1].
pub fn gumbel_hk(x: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain(format!("gumbel_hk requires k >= 1, got {k}")));
    }
    let t = (-x).exp();
    let h = (-t).exp();
    if h == 0.0 {
        // x so far left that even H underflows; every partial sum is 0 too.
        return Ok(0.0);
    }
    // term_i = H·t^i/i!, built by recurrence; all terms positive.
    let mut term = h;
    let mut sum = h;
    for i in 1..k {
        term *= t / i as f64;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    Ok(sum.min(1.0))
}

// ---------------------------------------------------------------------------
// Probability newtype
// ---------------------------------------------------------------------------

/// A validated probability in [0,1].
///
/// Construction checks the closed interval and rejects NaN; the inner value
/// is immutable thereafter, so arithmetic consumers can rely on the range.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    /// Validate and wrap.
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!(
                "probability must lie in [0,1], got {value}"
            )));
        }
        Ok(Probability(value))
    }

    /// Wrap a value that is within rounding noise of [0,1], clamping the
    /// overshoot. Intended for results of convergent positive-term sums
    /// that may exceed the interval by a few ulp.
    pub(crate) fn clamped(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    /// The inner value.
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

// ---------------------------------------------------------------------------
// Log-gamma (support for binomial tail weights)
// ---------------------------------------------------------------------------

/// ln Γ(x) for x > 0 (Lanczos approximation, g = 7, 9 terms; ~1e-14 relative).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection: ln Γ(x) = ln(π / sin πx) - ln Γ(1 - x).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}
