use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Arguments below this are shifted upward with the recurrence before the
/// asymptotic series is applied.
const SERIES_THRESHOLD: f64 = 15.0;

/// `B_{2k} / (2k (2k - 1))` for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

fn stirling_series(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut correction = 0.0;
    let mut power = inv;
    for c in STIRLING_COEFFS {
        correction += c * power;
        power *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + correction
}

/// Natural log of the gamma function for positive finite `x`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "ln_gamma requires finite x > 0, got {x}"
        )));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x >= SERIES_THRESHOLD {
        return Ok(stirling_series(x));
    }
    // Gamma(x) = Gamma(x + k) / (x (x + 1) ... (x + k - 1))
    let mut z = x;
    let mut product = 1.0;
    while z < SERIES_THRESHOLD {
        product *= z;
        z += 1.0;
    }
    Ok(stirling_series(z) - product.ln())
}

/// `ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "ln_beta requires positive arguments, got ({a}, {b})"
        )));
    }
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// Asymptotic regime for a one-way layout with `p` levels and `r` replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `r` grows with `p` fixed.
    ManyReplicates,
    /// `p` grows with `r` fixed.
    ManyLevels,
}

/// Stirling approximation to the gamma ratios that drive the fully-Bayes
/// factor.
///
/// * `ManyReplicates`: `ln[(pr/2)^{-(p-1)/2}]`, approximating
///   `ln[Gamma((pr - p)/2) / Gamma((pr - 1)/2)]`.
/// * `ManyLevels`: `ln[sqrt(2 pi) r (r-1)^{-1/2} ((r-1) / r^{r/(r-1)})^{p(r-1)/2}]`,
///   approximating `ln[Gamma(p/2) Gamma((pr - p)/2) / Gamma((pr - 1)/2)]`.
pub fn log_gamma_ratio_asymptotic(p: usize, r: usize, regime: Regime) -> Result<f64> {
    if p < 2 || r < 2 {
        return Err(Error::Domain(format!(
            "need p >= 2 and r >= 2, got p={p}, r={r}"
        )));
    }
    let (pf, rf) = (p as f64, r as f64);
    Ok(match regime {
        Regime::ManyReplicates => -0.5 * (pf - 1.0) * (pf * rf / 2.0).ln(),
        Regime::ManyLevels => {
            let base = (rf - 1.0).ln() - rf / (rf - 1.0) * rf.ln();
            0.5 * (2.0 * PI).ln() + rf.ln() - 0.5 * (rf - 1.0).ln() + 0.5 * pf * (rf - 1.0) * base
        }
    })
}
