//! Closed-form log Bayes factors against the intercept-only model.
//!
//! Every alternative is compared with `M_1` (common mean). A model with `k`
//! mean parameters (intercept included) fitted to `n` observations leaves a
//! residual-to-total ratio `R` in `[0, 1]`, and
//!
//! ```text
//! ln BF_FB  = ln G(k/2) + ln G((n-k)/2) - ln G(1/2) - ln G((n-1)/2) - ((n-k-1)/2) ln R
//! ln BF_BIC = -(n/2) ln R - ((k-1)/2) ln n
//! ```
//!
//! The fully-Bayes form is the exact marginal-likelihood ratio under a
//! g-prior mixed over a beta-prime hyperprior with `a = -1/2` and
//! `b = (n-k)/2 - a - 2`. Both are evaluated in log space; `R = 0` with a
//! nonzero total gives `+inf`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::numerics::ln_gamma;
use crate::ss::{OneWaySS, TwoWaySS};
use crate::{Error, Result};

/// Model-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Criterion {
    #[serde(rename = "FB")]
    FullyBayes,
    #[serde(rename = "BIC")]
    Bic,
}

impl Criterion {
    pub fn label(self) -> &'static str {
        match self {
            Criterion::FullyBayes => "FB",
            Criterion::Bic => "BIC",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fb" => Ok(Criterion::FullyBayes),
            "bic" => Ok(Criterion::Bic),
            other => Err(Error::InvalidConfig(format!("unknown criterion {other:?}"))),
        }
    }
}

/// The ANOVA mean structures. `Null` is `M_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Null,
    A,
    B,
    AdditiveAB,
    Interaction,
}

impl ModelId {
    pub fn label(self) -> &'static str {
        match self {
            ModelId::Null => "1",
            ModelId::A => "A+1",
            ModelId::B => "B+1",
            ModelId::AdditiveAB => "A+B+1",
            ModelId::Interaction => "(A+1)(B+1)",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for ModelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// The four two-way alternatives compared pairwise with `M_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TwoWayModelId {
    A,
    B,
    AdditiveAB,
    Interaction,
}

impl TwoWayModelId {
    pub const ALL: [TwoWayModelId; 4] = [
        TwoWayModelId::A,
        TwoWayModelId::B,
        TwoWayModelId::AdditiveAB,
        TwoWayModelId::Interaction,
    ];

    pub fn model(self) -> ModelId {
        match self {
            TwoWayModelId::A => ModelId::A,
            TwoWayModelId::B => ModelId::B,
            TwoWayModelId::AdditiveAB => ModelId::AdditiveAB,
            TwoWayModelId::Interaction => ModelId::Interaction,
        }
    }

    /// Number of mean parameters including the intercept.
    pub fn mean_params(self, p: usize, q: usize) -> usize {
        match self {
            TwoWayModelId::A => p,
            TwoWayModelId::B => q,
            TwoWayModelId::AdditiveAB => p + q - 1,
            TwoWayModelId::Interaction => p * q,
        }
    }

    /// Residual-to-total ratio, formed from component sums so it lies in `[0, 1]`.
    pub fn residual_ratio(self, ss: &TwoWaySS) -> Result<f64> {
        let total = checked_total(&[ss.w_a, ss.w_b, ss.w_ab, ss.w_e])?;
        let residual = match self {
            TwoWayModelId::A => ss.w_b + ss.w_ab + ss.w_e,
            TwoWayModelId::B => ss.w_a + ss.w_ab + ss.w_e,
            TwoWayModelId::AdditiveAB => ss.w_ab + ss.w_e,
            TwoWayModelId::Interaction => ss.w_e,
        };
        Ok((residual / total).min(1.0))
    }
}

impl fmt::Display for TwoWayModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.model().fmt(f)
    }
}

impl FromStr for TwoWayModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_uppercase();
        match key.trim_start_matches('M') {
            "A+1" | "A1" | "A" => Ok(TwoWayModelId::A),
            "B+1" | "B1" | "B" => Ok(TwoWayModelId::B),
            "A+B+1" | "AB1" | "A+B" => Ok(TwoWayModelId::AdditiveAB),
            "(A+1)(B+1)" | "AXB" | "A*B" | "FULL" => Ok(TwoWayModelId::Interaction),
            _ => Err(Error::InvalidConfig(format!("unknown two-way model {s:?}"))),
        }
    }
}

fn checked_total(components: &[f64]) -> Result<f64> {
    if components.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::DegenerateData(format!(
            "sums of squares must be finite and nonnegative, got {components:?}"
        )));
    }
    let total: f64 = components.iter().sum();
    if !total.is_finite() {
        return Err(Error::DegenerateData(
            "total sum of squares overflows".into(),
        ));
    }
    if total == 0.0 {
        return Err(Error::DegenerateData(
            "total sum of squares is zero (all observations identical)".into(),
        ));
    }
    Ok(total)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!(
            "ratio must lie in [0, 1], got {ratio}"
        )));
    }
    Ok(())
}

fn check_counts(n: usize, k: usize) -> Result<()> {
    if k < 2 || n <= k + 1 {
        return Err(Error::Domain(format!(
            "need at least 2 mean parameters and n > k + 1, got n={n}, k={k}"
        )));
    }
    Ok(())
}

fn check_levels(counts: &[(&str, usize)]) -> Result<()> {
    for &(name, v) in counts {
        if v < 2 {
            return Err(Error::Domain(format!("{name} must be at least 2, got {v}")));
        }
    }
    Ok(())
}

/// Fully-Bayes log Bayes factor for the closure prior with general `a`:
/// `ln[G(k/2 + a + 1/2) G((n-k)/2) / (G(a+1) G((n-1)/2))] + (a - (n-k-2)/2) ln R`.
///
/// The hyperprior's second shape is `b = (n-k)/2 - a - 2`, which must exceed
/// `-1` for the prior to be proper.
pub fn log_bf_fb_closure(n: usize, k: usize, ratio: f64, a: f64) -> Result<f64> {
    check_counts(n, k)?;
    check_ratio(ratio)?;
    let (nf, kf) = (n as f64, k as f64);
    let b = (nf - kf) / 2.0 - a - 2.0;
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Domain(format!(
            "hyperprior shapes must exceed -1, got a={a}, b={b}"
        )));
    }
    let exponent = a - (nf - kf - 2.0) / 2.0;
    let constant = ln_gamma(kf / 2.0 + a + 0.5)? + ln_gamma((nf - kf) / 2.0)?
        - ln_gamma(a + 1.0)?
        - ln_gamma((nf - 1.0) / 2.0)?;
    Ok(constant + power_term(exponent, ratio))
}

// exponent * ln(ratio), with the ratio = 0 limit for a negative exponent.
fn power_term(exponent: f64, ratio: f64) -> f64 {
    if ratio == 0.0 {
        f64::INFINITY
    } else if ratio == 1.0 {
        0.0
    } else {
        exponent * ratio.ln()
    }
}

/// Recommended fully-Bayes log Bayes factor (`a = -1/2`).
pub fn log_bf_fb(n: usize, k: usize, ratio: f64) -> Result<f64> {
    log_bf_fb_closure(n, k, ratio, -0.5)
}

/// BIC-based log Bayes factor: `-(n/2) ln R - ((k-1)/2) ln n`.
pub fn log_bf_bic(n: usize, k: usize, ratio: f64) -> Result<f64> {
    check_counts(n, k)?;
    check_ratio(ratio)?;
    let nf = n as f64;
    Ok(power_term(-nf / 2.0, ratio) - (k as f64 - 1.0) / 2.0 * nf.ln())
}

fn one_way_ratio(ss: &OneWaySS) -> Result<f64> {
    checked_total(&[ss.w_e, ss.w_h])?;
    Ok(ss.within_ratio().min(1.0))
}

pub fn log_bf_fb_one_way(ss: &OneWaySS, p: usize, r: usize) -> Result<f64> {
    check_levels(&[("p", p), ("r", r)])?;
    log_bf_fb(p * r, p, one_way_ratio(ss)?)
}

pub fn log_bf_bic_one_way(ss: &OneWaySS, p: usize, r: usize) -> Result<f64> {
    check_levels(&[("p", p), ("r", r)])?;
    log_bf_bic(p * r, p, one_way_ratio(ss)?)
}

pub fn log_bf_fb_two_way(
    ss: &TwoWaySS,
    p: usize,
    q: usize,
    r: usize,
    m: TwoWayModelId,
) -> Result<f64> {
    check_levels(&[("p", p), ("q", q), ("r", r)])?;
    log_bf_fb(p * q * r, m.mean_params(p, q), m.residual_ratio(ss)?)
}

pub fn log_bf_bic_two_way(
    ss: &TwoWaySS,
    p: usize,
    q: usize,
    r: usize,
    m: TwoWayModelId,
) -> Result<f64> {
    check_levels(&[("p", p), ("q", q), ("r", r)])?;
    log_bf_bic(p * q * r, m.mean_params(p, q), m.residual_ratio(ss)?)
}

/// `BF / (1 + BF)` from `ln BF`, without overflow.
pub fn posterior_prob(log_bf: f64) -> f64 {
    if log_bf >= 0.0 {
        1.0 / (1.0 + (-log_bf).exp())
    } else {
        let e = log_bf.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Null,
    Alternative,
}

/// The alternative is chosen only when `BF > 1`; a tie keeps the null.
pub fn choose_model(log_bf: f64) -> Choice {
    if log_bf > 0.0 {
        Choice::Alternative
    } else {
        Choice::Null
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesFactorReport {
    pub alternative: ModelId,
    pub log_bf_fb: f64,
    pub log_bf_bic: f64,
    pub posterior_prob_fb: f64,
    pub choice_fb: ModelId,
    pub choice_bic: ModelId,
    /// Residual-to-total sum-of-squares ratio of the alternative.
    pub ss_ratio: f64,
}

impl BayesFactorReport {
    fn new(alternative: ModelId, n: usize, k: usize, ratio: f64) -> Result<Self> {
        let log_bf_fb = log_bf_fb(n, k, ratio)?;
        let log_bf_bic = log_bf_bic(n, k, ratio)?;
        let pick = |lbf: f64| match choose_model(lbf) {
            Choice::Alternative => alternative,
            Choice::Null => ModelId::Null,
        };
        Ok(BayesFactorReport {
            alternative,
            log_bf_fb,
            log_bf_bic,
            posterior_prob_fb: posterior_prob(log_bf_fb),
            choice_fb: pick(log_bf_fb),
            choice_bic: pick(log_bf_bic),
            ss_ratio: ratio,
        })
    }
}

pub fn one_way_report(ss: &OneWaySS, p: usize, r: usize) -> Result<BayesFactorReport> {
    check_levels(&[("p", p), ("r", r)])?;
    BayesFactorReport::new(ModelId::A, p * r, p, one_way_ratio(ss)?)
}

pub fn two_way_report(
    ss: &TwoWaySS,
    p: usize,
    q: usize,
    r: usize,
    m: TwoWayModelId,
) -> Result<BayesFactorReport> {
    check_levels(&[("p", p), ("q", q), ("r", r)])?;
    BayesFactorReport::new(
        m.model(),
        p * q * r,
        m.mean_params(p, q),
        m.residual_ratio(ss)?,
    )
}

/// All four pairwise comparisons plus a five-model ranking.
///
/// The ranking treats `ln BF(M_1; M_1) = 0` and equal prior model
/// probabilities, so posterior model probabilities are a softmax of the log
/// Bayes factors. Ties go to the model listed first (fewest parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWaySelection {
    pub reports: Vec<BayesFactorReport>,
    pub best_fb: ModelId,
    pub best_bic: ModelId,
    /// Posterior model probabilities under the fully-Bayes factors, `M_1` first.
    pub posterior_fb: Vec<(ModelId, f64)>,
}

pub fn two_way_selection(ss: &TwoWaySS, p: usize, q: usize, r: usize) -> Result<TwoWaySelection> {
    let reports = TwoWayModelId::ALL
        .iter()
        .map(|&m| two_way_report(ss, p, q, r, m))
        .collect::<Result<Vec<_>>>()?;

    let best = |key: fn(&BayesFactorReport) -> f64| {
        let mut best = (ModelId::Null, 0.0);
        for rep in &reports {
            if key(rep) > best.1 {
                best = (rep.alternative, key(rep));
            }
        }
        best.0
    };
    let best_fb = best(|r| r.log_bf_fb);
    let best_bic = best(|r| r.log_bf_bic);

    let logs: Vec<(ModelId, f64)> = std::iter::once((ModelId::Null, 0.0))
        .chain(reports.iter().map(|r| (r.alternative, r.log_bf_fb)))
        .collect();
    let posterior_fb = softmax(&logs);

    Ok(TwoWaySelection {
        reports,
        best_fb,
        best_bic,
        posterior_fb,
    })
}

fn softmax(logs: &[(ModelId, f64)]) -> Vec<(ModelId, f64)> {
    let max = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        let count = logs.iter().filter(|l| l.1 == f64::INFINITY).count() as f64;
        return logs
            .iter()
            .map(|&(m, l)| (m, if l == f64::INFINITY { 1.0 / count } else { 0.0 }))
            .collect();
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l.1 - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    logs.iter()
        .zip(weights)
        .map(|(&(m, _), w)| (m, w / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn one_way_ss_with_ratio(ratio: f64) -> OneWaySS {
        OneWaySS::from_components(ratio, 1.0 - ratio)
    }

    #[test]
    fn fb_one_way_examples() {
        let lbf = log_bf_fb_one_way(&one_way_ss_with_ratio(1.0), 2, 2).unwrap();
        assert_abs_diff_eq!(lbf, (2.0 / PI).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(lbf, -0.451_582_705_3, epsilon = 1e-10);

        let lbf = log_bf_fb_one_way(&one_way_ss_with_ratio(0.5), 2, 2).unwrap();
        assert_abs_diff_eq!(lbf, (2.0 / PI * 2f64.sqrt()).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(lbf, -0.105_009_115_0, epsilon = 1e-10);

        let lbf = log_bf_fb_one_way(&OneWaySS::from_components(0.0, 1.0), 2, 2).unwrap();
        assert_eq!(lbf, f64::INFINITY);
    }

    #[test]
    fn fb_rejects_constant_data() {
        let err = log_bf_fb_one_way(&OneWaySS::from_components(0.0, 0.0), 3, 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
        let err = log_bf_bic_one_way(&OneWaySS::from_components(0.0, 0.0), 3, 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }

    #[test]
    fn bic_one_way_examples() {
        let lbf = log_bf_bic_one_way(&one_way_ss_with_ratio(0.5), 2, 2).unwrap();
        assert_abs_diff_eq!(lbf, 2f64.ln(), epsilon = 1e-14);
        let lbf = log_bf_bic_one_way(&one_way_ss_with_ratio(1.0), 2, 2).unwrap();
        assert_abs_diff_eq!(lbf, -0.5 * 4f64.ln(), epsilon = 1e-14);
    }

    fn two_way_with(ratio_num: f64, m: TwoWayModelId) -> TwoWaySS {
        // put the "explained" part into the component the model removes
        let explained = 1.0 - ratio_num;
        match m {
            TwoWayModelId::A => TwoWaySS::from_components(explained, 0.0, 0.0, ratio_num),
            TwoWayModelId::B => TwoWaySS::from_components(0.0, explained, 0.0, ratio_num),
            TwoWayModelId::AdditiveAB => TwoWaySS::from_components(explained, 0.0, 0.0, ratio_num),
            TwoWayModelId::Interaction => TwoWaySS::from_components(0.0, 0.0, explained, ratio_num),
        }
    }

    #[test]
    fn fb_two_way_examples() {
        let ss = TwoWaySS::from_components(0.0, 0.3, 0.2, 0.5);
        let lbf = log_bf_fb_two_way(&ss, 2, 2, 2, TwoWayModelId::A).unwrap();
        assert_abs_diff_eq!(lbf, (16.0 / (15.0 * PI)).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(lbf, -1.0802, epsilon = 1e-4);

        let ss = two_way_with(1.0, TwoWayModelId::Interaction);
        let lbf = log_bf_fb_two_way(&ss, 2, 2, 2, TwoWayModelId::Interaction).unwrap();
        let expected =
            2.0 * ln_gamma(2.0).unwrap() - ln_gamma(0.5).unwrap() - ln_gamma(3.5).unwrap();
        assert_abs_diff_eq!(lbf, expected, epsilon = 1e-13);

        let err = log_bf_fb_two_way(&ss, 2, 1, 2, TwoWayModelId::A).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn bic_two_way_examples() {
        let ss = two_way_with(0.5, TwoWayModelId::A);
        let lbf = log_bf_bic_two_way(&ss, 2, 2, 2, TwoWayModelId::A).unwrap();
        assert_abs_diff_eq!(lbf, 4.0 * 2f64.ln() - 0.5 * 8f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(lbf, 1.7329, epsilon = 1e-4);

        let ss = two_way_with(1.0, TwoWayModelId::Interaction);
        let (p, q, r) = (3, 2, 2);
        let lbf = log_bf_bic_two_way(&ss, p, q, r, TwoWayModelId::Interaction).unwrap();
        assert_abs_diff_eq!(lbf, -2.5 * 12f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn two_way_ratios_stay_in_unit_interval() {
        let ss = TwoWaySS::from_components(1e-300, 0.1, 0.2, 0.3);
        for m in TwoWayModelId::ALL {
            let r = m.residual_ratio(&ss).unwrap();
            assert!((0.0..=1.0).contains(&r), "{m}: {r}");
        }
        let ss = TwoWaySS::from_components(1.0, 2.0, 0.0, 0.0);
        assert_eq!(
            log_bf_fb_two_way(&ss, 2, 2, 2, TwoWayModelId::AdditiveAB).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn posterior_examples() {
        assert_eq!(posterior_prob(0.0), 0.5);
        assert_eq!(posterior_prob(f64::INFINITY), 1.0);
        assert_eq!(posterior_prob(f64::NEG_INFINITY), 0.0);
        assert_abs_diff_eq!(posterior_prob(3f64.ln()), 0.75, epsilon = 1e-15);
        assert!(posterior_prob(800.0) == 1.0 && posterior_prob(-800.0) >= 0.0);
    }

    #[test]
    fn choice_examples() {
        assert_eq!(choose_model(0.01), Choice::Alternative);
        assert_eq!(choose_model(0.0), Choice::Null);
        assert_eq!(choose_model(f64::NEG_INFINITY), Choice::Null);
        assert_eq!(choose_model(f64::INFINITY), Choice::Alternative);
    }

    #[test]
    fn report_choices_follow_sign() {
        let rep = one_way_report(&OneWaySS::from_components(0.0, 1.0), 2, 2).unwrap();
        assert_eq!(rep.choice_fb, ModelId::A);
        assert_eq!(rep.posterior_prob_fb, 1.0);
        let rep = one_way_report(&one_way_ss_with_ratio(1.0), 2, 2).unwrap();
        assert_eq!(rep.choice_fb, ModelId::Null);
        assert_eq!(rep.choice_bic, ModelId::Null);
    }

    #[test]
    fn general_closure_reduces_to_recommended() {
        for (n, k, ratio) in [(20, 4, 0.3), (9, 3, 1.0), (50, 10, 0.05)] {
            let a = log_bf_fb_closure(n, k, ratio, -0.5).unwrap();
            let b = log_bf_fb(n, k, ratio).unwrap();
            assert_eq!(a, b);
        }
        assert!(log_bf_fb_closure(4, 2, 0.5, 0.5).is_err());
    }

    #[test]
    fn selection_ranks_models() {
        let ss = TwoWaySS::from_components(10.0, 0.01, 0.01, 1.0);
        let sel = two_way_selection(&ss, 3, 3, 4).unwrap();
        assert_eq!(sel.best_fb, ModelId::A);
        let total: f64 = sel.posterior_fb.iter().map(|x| x.1).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn model_id_parsing() {
        assert_eq!("A+1".parse::<TwoWayModelId>().unwrap(), TwoWayModelId::A);
        assert_eq!(
            "(A+1)(B+1)".parse::<TwoWayModelId>().unwrap(),
            TwoWayModelId::Interaction
        );
        assert_eq!(
            "m_a+b+1".replace('_', "").parse::<TwoWayModelId>().unwrap(),
            TwoWayModelId::AdditiveAB
        );
        assert!("C+1".parse::<TwoWayModelId>().is_err());
        assert_eq!("FB".parse::<Criterion>().unwrap(), Criterion::FullyBayes);
    }
}
