//! Fair-win probability when preference does not depend on geography.
//!
//! Half-time shares are treated as binomial sampling estimators of the final
//! shares. The probability that the trailing candidate still wins is a normal
//! tail that routinely sits thousands of decades below `f64::MIN_POSITIVE`,
//! so everything here is carried as a base-10 logarithm.

use std::f64::consts::{LN_10, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::erf::erfc;

use crate::{Error, Result};

/// Above this argument the normal tail switches to the Mills-ratio series.
pub const ASYMPTOTIC_THRESHOLD: f64 = 8.0;

/// A probability stored as `log10`.
///
/// Serialised as the string `1e<log10>`, e.g. `"1e-2275.9"`, so that values
/// far below float underflow survive a round trip through JSON or CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProb {
    pub log10: f64,
    /// Set when the asymptotic tail series was used.
    pub asymptotic: bool,
}

impl LogProb {
    pub const ONE: LogProb = LogProb { log10: 0.0, asymptotic: false };
    pub const ZERO: LogProb = LogProb { log10: f64::NEG_INFINITY, asymptotic: false };

    pub fn from_ln(ln: f64, asymptotic: bool) -> Self {
        // clamp tiny positive rounding noise and normalise -0
        let log10 = (ln / LN_10).min(0.0) + 0.0;
        LogProb { log10, asymptotic }
    }

    pub fn ln(&self) -> f64 {
        self.log10 * LN_10
    }

    /// The probability itself; underflows to zero below ~1e-308.
    pub fn probability(&self) -> f64 {
        10f64.powf(self.log10)
    }

    /// `1 - p`, computed without cancellation.
    pub fn complement(&self) -> Self {
        LogProb::from_ln(ln_one_minus_exp(self.ln()), self.asymptotic)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1e{}", self.log10)
    }
}

impl FromStr for LogProb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let exponent = s
            .trim()
            .strip_prefix("1e")
            .ok_or_else(|| Error::InvalidSpec(format!("log-probability must look like 1e<log10>, got {s:?}")))?;
        let log10: f64 =
            exponent.parse().map_err(|_| Error::InvalidSpec(format!("bad log-probability exponent {exponent:?}")))?;
        if log10 > 0.0 || log10.is_nan() {
            return Err(Error::InvalidSpec(format!("log-probability must be <= 0, got {log10}")));
        }
        Ok(LogProb { log10: log10 + 0.0, asymptotic: false })
    }
}

impl Serialize for LogProb {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LogProb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `ln(1 - e^a)` for `a <= 0`.
fn ln_one_minus_exp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

fn ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * PI).ln()
}

/// Natural log of the upper normal tail `1 - Φ(z)`.
pub(crate) fn ln_normal_tail(z: f64) -> (f64, bool) {
    if z.is_nan() {
        return (f64::NAN, false);
    }
    if z == f64::INFINITY {
        return (f64::NEG_INFINITY, true);
    }
    if z > ASYMPTOTIC_THRESHOLD {
        let r = 1.0 / (z * z);
        let series = 1.0 - r + 3.0 * r * r - 15.0 * r * r * r;
        return (ln_pdf(z) - z.ln() + series.ln(), true);
    }
    if z >= 0.0 {
        ((0.5 * erfc(z / std::f64::consts::SQRT_2)).ln(), false)
    } else {
        ((-0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln_1p(), false)
    }
}

/// `log10(1 - Φ(z))` for any `z`.
///
/// Uses the complementary error function up to `z = 8` and the series
/// `φ(z)/z · (1 - 1/z² + 3/z⁴ - 15/z⁶)` beyond, where the truncation error is
/// below 1e-6 relative in the logarithm.
pub fn log_normal_tail(z: f64) -> LogProb {
    let (ln, asymptotic) = ln_normal_tail(z);
    LogProb::from_ln(ln, asymptotic)
}

/// Standardised gap `(q - p) / σ` with `σ² = (p(1-p) + q(1-q)) / n`.
fn gap_z(p: f64, q: f64, n: f64) -> f64 {
    let var = (p * (1.0 - p) + q * (1.0 - q)) / n;
    (q - p) / var.sqrt()
}

/// Probability that the half-time trailer `H` wins the full count when the
/// remaining ballots are drawn from the same well-mixed electorate.
///
/// Shares are the two-candidate shares `p = v_H/v`, `q = v_N/v` with
/// `v = v_H + v_N`; the final margin is `G ~ N(p - q, (p(1-p) + q(1-q))/v)`
/// and the result is `P(G > 0)`.
pub fn fair_win_probability(v_h: u64, v_n: u64) -> Result<LogProb> {
    let v = v_h + v_n;
    if v == 0 {
        return Err(Error::Degenerate("no two-candidate votes at half time"));
    }
    if v_h == 0 {
        return Ok(LogProb::ZERO);
    }
    if v_n == 0 {
        return Ok(LogProb::ONE);
    }
    let vf = v as f64;
    let (p, q) = (v_h as f64 / vf, v_n as f64 / vf);
    Ok(log_normal_tail(gap_z(p, q, vf)))
}

/// Same probability from raw shares of all counted ballots.
///
/// Here `p` and `q` need not sum to one (third-party ballots are part of
/// the denominator) and `n` is the number of counted ballots.
pub fn fair_win_probability_shares(p: f64, q: f64, n: f64) -> Result<LogProb> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) || p + q > 1.0 + 1e-12 {
        return Err(Error::InvalidSpec(format!("shares ({p}, {q}) are not a valid split")));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidSpec(format!("ballot count must be positive, got {n}")));
    }
    let var = p * (1.0 - p) + q * (1.0 - q);
    if var == 0.0 {
        return Ok(if p > q { LogProb::ONE } else { LogProb::ZERO });
    }
    Ok(log_normal_tail(gap_z(p, q, n)))
}

/// Hazard `φ(u) / (1 - Φ(u))`.
fn hazard(u: f64) -> f64 {
    (ln_pdf(u) - ln_normal_tail(u).0).exp()
}

/// `ln ∫ (1 - Φ((a + s t)/b)) φ(t) dt`, the probability that an
/// `N(p, b²)` variable exceeds an independent `N(q, s²)` one with
/// `a = q - p`.
fn ln_tail_integral(a: f64, s: f64, b: f64) -> f64 {
    let k = s / b;
    let ln_f = |t: f64| ln_normal_tail((a + s * t) / b).0 + ln_pdf(t);
    let slope = |t: f64| -k * hazard((a + s * t) / b) - t;

    // the integrand is log-concave: bracket the mode and bisect
    let (mut lo, mut hi) = (-1.0, 1.0);
    while slope(lo) < 0.0 {
        lo *= 2.0;
    }
    while slope(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    let mode = 0.5 * (lo + hi);
    let peak = ln_f(mode);

    let step = 1e-4 * (1.0 + mode.abs());
    let curvature = (ln_f(mode + step) - 2.0 * peak + ln_f(mode - step)) / (step * step);
    let width = if curvature < 0.0 { (-curvature).sqrt().recip() } else { 1.0 };

    // walk out until the integrand has dropped by e^-80
    let mut left = mode - 40.0 * width;
    while ln_f(left) > peak - 80.0 {
        left -= 10.0 * width;
    }
    let mut right = mode + 40.0 * width;
    while ln_f(right) > peak - 80.0 {
        right += 10.0 * width;
    }

    let n = 4000;
    let h = (right - left) / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let t = left + h * i as f64;
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        total += weight * (ln_f(t) - peak).exp();
    }
    peak + (total * h).ln()
}

/// Literal evaluation of `∫ (1 - Φ_Y) dΦ_Z` in log space.
///
/// `Y ~ N(p, p(1-p)/v)` is the final `H` share and `Z ~ N(q, q(1-q)/v)` the
/// final `N` share. The integral is taken over the standardised `Z` with a
/// trapezoid rule centred on the mode of the log-integrand. It serves as an
/// independent check on [`fair_win_probability`].
pub fn fair_win_probability_quadrature(v_h: u64, v_n: u64) -> Result<LogProb> {
    let v = v_h + v_n;
    if v == 0 {
        return Err(Error::Degenerate("no two-candidate votes at half time"));
    }
    if v_h == 0 {
        return Ok(LogProb::ZERO);
    }
    if v_n == 0 {
        return Ok(LogProb::ONE);
    }
    let vf = v as f64;
    let (p, q) = (v_h as f64 / vf, v_n as f64 / vf);
    let sd_p = (p * (1.0 - p) / vf).sqrt();
    let sd_q = (q * (1.0 - q) / vf).sqrt();
    // integrate the smaller of the two complementary probabilities
    if p > q {
        let other = ln_tail_integral(p - q, sd_p, sd_q);
        Ok(LogProb::from_ln(ln_one_minus_exp(other), false))
    } else {
        Ok(LogProb::from_ln(ln_tail_integral(q - p, sd_q, sd_p), false))
    }
}
