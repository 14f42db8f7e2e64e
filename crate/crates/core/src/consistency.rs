//! Large-sample behaviour of the one-way and two-way Bayes factors.
//!
//! Two regimes are covered: many replicates (`r -> inf`, `p` fixed) and many
//! levels (`p -> inf`, `r` fixed). In the many-levels regime the fully-Bayes
//! factor selects the alternative only when the scaled effect size
//! `c_A = lim sum(alpha^2) / (p sigma^2)` exceeds `h(r) = r^{1/(r-1)} - 1`,
//! while the BIC factor picks the null model for every effect size.

use serde::Serialize;

use crate::bayes_factor::Criterion;
use crate::numerics::ln_gamma;
pub use crate::numerics::Regime;
use crate::{Error, Result};

/// True model in a one-way comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Truth {
    /// `M_1`, common mean.
    Null,
    /// `M_{A+1}`, level-specific means.
    Alternative,
}

/// Limits of the scaled effect sizes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EffectSizes {
    pub c_a: f64,
    pub c_b: f64,
    pub c_ab: f64,
}

impl EffectSizes {
    pub fn new(c_a: f64, c_b: f64, c_ab: f64) -> Result<Self> {
        for (name, v) in [("c_a", c_a), ("c_b", c_b), ("c_ab", c_ab)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(EffectSizes { c_a, c_b, c_ab })
    }

    pub fn one_way(c_a: f64) -> Result<Self> {
        Self::new(c_a, 0.0, 0.0)
    }
}

fn check_replicates(r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::Domain(format!("r must be at least 2, got {r}")));
    }
    Ok(())
}

fn check_effect(c: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "effect size must be finite and >= 0, got {c}"
        )));
    }
    Ok(())
}

/// `h(r) = r^{1/(r-1)} - 1`.
pub fn h_threshold(r: usize) -> Result<f64> {
    check_replicates(r)?;
    let rf = r as f64;
    Ok(rf.powf(1.0 / (rf - 1.0)) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

/// The two-way interaction-model window `lower < middle < upper`, with
/// `lower = r^{1/(r-1)}`, `middle = 1 + c_A + c_B + c_AB` and
/// `upper = (1 + c_AB)^r / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyWindow {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl ConsistencyWindow {
    pub fn new(r: usize, e: &EffectSizes) -> Result<Self> {
        check_replicates(r)?;
        let rf = r as f64;
        Ok(ConsistencyWindow {
            lower: rf.powf(1.0 / (rf - 1.0)),
            middle: 1.0 + e.c_a + e.c_b + e.c_ab,
            upper: (1.0 + e.c_ab).powf(rf) / rf,
        })
    }

    /// Strict inequalities: the boundary counts as inconsistent.
    pub fn verdict(&self) -> Verdict {
        if self.lower < self.middle && self.middle < self.upper {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        }
    }
}

/// Whether the fully-Bayes factor is consistent under the interaction model
/// when `p, q -> inf` with `r` fixed.
pub fn two_way_consistency_window(r: usize, e: &EffectSizes) -> Result<Verdict> {
    Ok(ConsistencyWindow::new(r, e)?.verdict())
}

/// Probability limit of `W_E / W_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LimitLaw {
    Point(f64),
    /// `(1 + X / (levels * r))^{-1}` with `X ~ chi^2_{chi2_df}`; tends to one
    /// as `r` grows but is not degenerate at any finite `r`.
    ChiSquare {
        chi2_df: usize,
        levels: usize,
    },
}

impl LimitLaw {
    pub fn point(&self) -> Option<f64> {
        match *self {
            LimitLaw::Point(v) => Some(v),
            LimitLaw::ChiSquare { .. } => None,
        }
    }

    /// Value of the limit law for a given draw of the chi-square variable.
    pub fn at(&self, r: usize, chi2: f64) -> f64 {
        match *self {
            LimitLaw::Point(v) => v,
            LimitLaw::ChiSquare { levels, .. } => 1.0 / (1.0 + chi2 / (levels * r) as f64),
        }
    }
}

/// `fixed` is `p` in the many-replicates regime and `r` in the many-levels one.
pub fn limit_we_wt(regime: Regime, truth: Truth, fixed: usize, c_a: f64) -> Result<LimitLaw> {
    if fixed < 2 {
        return Err(Error::Domain(format!(
            "fixed count must be at least 2, got {fixed}"
        )));
    }
    check_effect(c_a)?;
    let f = fixed as f64;
    Ok(match (regime, truth) {
        (Regime::ManyLevels, Truth::Null) => LimitLaw::Point(1.0 - 1.0 / f),
        (Regime::ManyLevels, Truth::Alternative) => LimitLaw::Point((1.0 - 1.0 / f) / (1.0 + c_a)),
        (Regime::ManyReplicates, Truth::Alternative) => LimitLaw::Point(1.0 / (1.0 + c_a)),
        (Regime::ManyReplicates, Truth::Null) => LimitLaw::ChiSquare {
            chi2_df: fixed - 1,
            levels: fixed,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLogBf {
    pub value: f64,
    /// Set under `M_1` with many replicates, where the limit carries an
    /// additional `chi^2_{p-1} / 2` term that is left out of `value`.
    pub stochastic_term_omitted: bool,
}

/// Leading-order log Bayes factor trajectory for a one-way layout.
pub fn asymptotic_log_bf(
    criterion: Criterion,
    regime: Regime,
    truth: Truth,
    p: usize,
    r: usize,
    c_a: f64,
) -> Result<AsymptoticLogBf> {
    if p < 2 || r < 2 {
        return Err(Error::Domain(format!(
            "need p >= 2 and r >= 2, got p={p}, r={r}"
        )));
    }
    check_effect(c_a)?;
    let (pf, rf) = (p as f64, r as f64);
    let ln_effect = c_a.ln_1p();

    let (value, omitted) = match (criterion, regime) {
        (Criterion::FullyBayes, Regime::ManyReplicates) => {
            // c_1(p) = (p/2)^{-(p-1)/2} G(p/2) / G(1/2)
            let ln_c1 = -(pf - 1.0) / 2.0 * (pf / 2.0).ln() + ln_gamma(pf / 2.0)? - ln_gamma(0.5)?;
            let base = ln_c1 - (pf - 1.0) / 2.0 * rf.ln();
            match truth {
                Truth::Null => (base, true),
                Truth::Alternative => (base + (pf * (rf - 1.0) - 1.0) / 2.0 * ln_effect, false),
            }
        }
        (Criterion::Bic, Regime::ManyReplicates) => {
            // c_2(p) = p^{-(p-1)/2}
            let base = -(pf - 1.0) / 2.0 * pf.ln() - (pf - 1.0) / 2.0 * rf.ln();
            match truth {
                Truth::Null => (base, true),
                Truth::Alternative => (base + pf * rf / 2.0 * ln_effect, false),
            }
        }
        (Criterion::FullyBayes, Regime::ManyLevels) => {
            let constant = 0.5 * 2f64.ln() + rf.ln() - 0.5 * (rf - 1.0).ln();
            match truth {
                Truth::Null => (constant - pf / 2.0 * rf.ln(), false),
                Truth::Alternative => (
                    constant + pf * (rf - 1.0) / 2.0 * (ln_effect - rf.ln() / (rf - 1.0)),
                    false,
                ),
            }
        }
        (Criterion::Bic, Regime::ManyLevels) => {
            let base = 0.5 * rf.ln() - (pf - 1.0) / 2.0 * pf.ln()
                + pf / 2.0 * ((rf - 1.0) * rf.ln() - rf * (rf - 1.0).ln());
            match truth {
                Truth::Null => (base, false),
                Truth::Alternative => (base + pf / 2.0 * rf * ln_effect, false),
            }
        }
    };
    Ok(AsymptoticLogBf {
        value,
        stochastic_term_omitted: omitted,
    })
}

/// Per-level growth rate of the fully-Bayes log factor under the alternative
/// in the many-levels regime: `((r-1)/2) ln((1 + c_A) / r^{1/(r-1)})`.
/// Positive exactly when `c_A > h(r)`.
pub fn many_levels_growth_rate(r: usize, c_a: f64) -> Result<f64> {
    check_replicates(r)?;
    check_effect(c_a)?;
    let rf = r as f64;
    Ok((rf - 1.0) / 2.0 * (c_a.ln_1p() - rf.ln() / (rf - 1.0)))
}

/// Difference of scaled mean squared prediction errors between the grand
/// mean and the level means: `effect - (p-1)/(pr)`.
pub fn predicted_mse_gap(p: usize, r: usize, effect: f64) -> Result<f64> {
    if p < 2 || r < 2 {
        return Err(Error::Domain(format!(
            "need p >= 2 and r >= 2, got p={p}, r={r}"
        )));
    }
    check_effect(effect)?;
    Ok(effect - (p as f64 - 1.0) / (p as f64 * r as f64))
}
