//! Scalar special functions used by every probability computation in the
//! crate: log-gamma, the regularized incomplete gamma function (through the
//! chi-square survival function), the standard normal CDF and quantile, and
//! the Poisson pmf / upper tail.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps round-off excursions (e.g. `1 - 1.0000000000000002`) into range.
    pub(crate) fn clamped(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // Exact values at the two points that anchor the factorial identities.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;
const FPMIN: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
/// Converges quickly for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let ln_prefactor = a * x.ln() - x - ln_gamma_pos(a);
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * ln_prefactor.exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by the Legendre continued
/// fraction (modified Lentz). Converges quickly for `x ≥ a + 1`.
fn gamma_q_cont_frac(a: f64, x: f64) -> f64 {
    let ln_prefactor = a * x.ln() - x - ln_gamma_pos(a);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    ln_prefactor.exp() * h
}

/// Regularized upper incomplete gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub(crate) fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cont_frac(a, x)
    }
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cont_frac(a, x)
    }
}

/// Survival function `P(X > x)` of a chi-square variable with `df` degrees
/// of freedom.
pub fn chi2_sf(x: f64, df: f64) -> Result<Probability> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("chi2_sf requires x >= 0, got {x}")));
    }
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Domain(format!("chi2_sf requires df > 0, got {df}")));
    }
    if x.is_infinite() {
        return Ok(Probability::ZERO);
    }
    Ok(Probability::clamped(gamma_q(0.5 * df, 0.5 * x)))
}

/// Standard normal CDF, via `Φ(z) = ½·Q(½, z²/2)` for `z < 0`.
pub fn normal_cdf(z: f64) -> Probability {
    if z.is_nan() {
        return Probability::clamped(f64::NAN);
    }
    if z.is_infinite() {
        return if z > 0.0 {
            Probability::ONE
        } else {
            Probability::ZERO
        };
    }
    let half_sq = 0.5 * z * z;
    let v = if z < 0.0 {
        0.5 * gamma_q(0.5, half_sq)
    } else {
        0.5 + 0.5 * gamma_p(0.5, half_sq)
    };
    Probability::clamped(v)
}

/// Upper tail `1 − Φ(z)` without cancellation for large positive `z`.
pub fn normal_sf(z: f64) -> Probability {
    normal_cdf(-z)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

// Acklam's rational approximation, refined below.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    let (a, b, c, d) = (&ACKLAM_A, &ACKLAM_B, &ACKLAM_C, &ACKLAM_D);
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    }
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile requires 0 < p < 1, got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail so the residual Φ(z) - p keeps relative precision.
    let (p_low, sign) = if p > 0.5 { (1.0 - p, -1.0) } else { (p, 1.0) };
    let mut z = acklam(p_low);
    // One Halley step on the residual.
    let e = normal_cdf(z).get() - p_low;
    let u = e / normal_pdf(z);
    z -= u / (1.0 + 0.5 * z * u);
    Ok(sign * z)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Poisson mean must be > 0, got {lambda}"
        )))
    }
}

fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    let kf = k as f64;
    kf * lambda.ln() - lambda - ln_gamma_pos(kf + 1.0)
}

/// Poisson probability mass `P(X = k)` evaluated in log space.
pub fn poisson_pmf(k: u64, lambda: f64) -> Result<Probability> {
    check_lambda(lambda)?;
    Ok(Probability::clamped(ln_poisson_pmf(k, lambda).exp()))
}

/// Poisson upper tail `P(X > k)`.
///
/// Below the mode the complement of the lower partial sum is accurate; above
/// it the tail is summed directly so small tails keep their relative
/// precision.
pub fn poisson_sf(k: u64, lambda: f64) -> Result<Probability> {
    check_lambda(lambda)?;
    if (k as f64) < lambda {
        let lower: f64 = (0..=k).map(|j| ln_poisson_pmf(j, lambda).exp()).sum();
        return Ok(Probability::clamped(1.0 - lower));
    }
    let mut j = k + 1;
    let mut term = ln_poisson_pmf(j, lambda).exp();
    let mut sum = 0.0;
    while term > 0.0 {
        sum += term;
        j += 1;
        term *= lambda / j as f64;
        if term < sum * 1e-17 {
            break;
        }
    }
    Ok(Probability::clamped(sum))
}
