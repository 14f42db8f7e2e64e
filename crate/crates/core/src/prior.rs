//! Beta-prime hyperprior on the g-prior scale and the numerical Bayes factor.
//!
//! Given `g`, the Bayes factor of a model with `k` mean parameters against
//! `M_1` is `(1+g)^{(n-k)/2} (1 + g R)^{-(n-1)/2}` where `R` is the
//! residual-to-total sum-of-squares ratio. Integrating over the beta-prime
//! density `g^b (1+g)^{-a-b-2} / B(a+1, b+1)` gives the fully-Bayes factor.
//! Only the closure choice `b = (n-k)/2 - a - 2` has a closed form; this
//! module computes the integral numerically for any `(a, b)`.
//!
//! Integration runs over `t = g / (1+g)` in `(0, 1)` with the Jacobian
//! `(1-t)^{-2}` folded into the log integrand.

use crate::numerics::{integrate_unit_interval_log, ln_beta, ln_gamma, QuadratureSpec, UnitPoint};
use crate::{Error, Result};

/// Beta-prime (Pearson type VI) density with shapes `a, b > -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrimePrior {
    a: f64,
    b: f64,
}

impl BetaPrimePrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!(
                "beta-prime shapes must be finite and exceed -1, got a={a}, b={b}"
            )));
        }
        Ok(BetaPrimePrior { a, b })
    }

    /// The shape `b` that makes the marginal density closed-form for the given `a`.
    pub fn closure_b(n: usize, mean_params: usize, a: f64) -> f64 {
        (n as f64 - mean_params as f64) / 2.0 - a - 2.0
    }

    /// `a = -1/2` with the closure `b`.
    pub fn recommended(n: usize, mean_params: usize) -> Result<Self> {
        Self::new(-0.5, Self::closure_b(n, mean_params, -0.5))
    }

    /// The hyper-g family corresponds to `b = 0`.
    pub fn hyper_g(a: f64) -> Result<Self> {
        Self::new(a, 0.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_closure(&self, n: usize, mean_params: usize) -> bool {
        (self.b - Self::closure_b(n, mean_params, self.a)).abs() <= 1e-12 * self.b.abs().max(1.0)
    }

    fn ln_normalizer(&self) -> f64 {
        ln_beta(self.a + 1.0, self.b + 1.0).expect("shapes validated > -1")
    }

    /// Log density in `t = g/(1+g)`, including the Jacobian: `t^b (1-t)^a / B`.
    fn log_density_unit(&self, pt: &UnitPoint) -> f64 {
        self.b * pt.ln_t + self.a * pt.ln_complement - self.ln_normalizer()
    }
}

pub fn beta_prime_log_density(prior: &BetaPrimePrior, g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Domain(format!(
            "g must be positive and finite, got {g}"
        )));
    }
    Ok(prior.b * g.ln() - (prior.a + prior.b + 2.0) * g.ln_1p() - prior.ln_normalizer())
}

/// `∫_0^∞ p(g) dg`, which should be one.
pub fn beta_prime_total_mass(prior: &BetaPrimePrior, spec: &QuadratureSpec) -> Result<f64> {
    integrate_unit_interval_log(|pt| prior.log_density_unit(&pt), &[], spec).map(|i| i.value)
}

fn check_integrand_args(n: usize, mean_params: usize, ratio: f64) -> Result<()> {
    if !(mean_params >= 2 && n > mean_params) {
        return Err(Error::Domain(format!(
            "need n > mean_params >= 2, got n={n}, mean_params={mean_params}"
        )));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "ratio must lie in (0, 1], got {ratio}"
        )));
    }
    Ok(())
}

/// Log of `(1+g)^{(n-k)/2} (gR + 1)^{-(n-1)/2} p(g)`.
pub fn log_bf_integrand(
    n: usize,
    mean_params: usize,
    ratio: f64,
    prior: &BetaPrimePrior,
    g: f64,
) -> Result<f64> {
    check_integrand_args(n, mean_params, ratio)?;
    let density = beta_prime_log_density(prior, g)?;
    let (nf, kf) = (n as f64, mean_params as f64);
    Ok((nf - kf) / 2.0 * g.ln_1p() - (nf - 1.0) / 2.0 * (g * ratio).ln_1p() + density)
}

#[derive(Debug, Clone, Copy)]
struct UnitIntegrand {
    half_residual_df: f64,
    half_total_df: f64,
    ratio: f64,
    prior: BetaPrimePrior,
}

impl UnitIntegrand {
    fn new(n: usize, mean_params: usize, ratio: f64, prior: BetaPrimePrior) -> Self {
        UnitIntegrand {
            half_residual_df: (n as f64 - mean_params as f64) / 2.0,
            half_total_df: (n as f64 - 1.0) / 2.0,
            ratio,
            prior,
        }
    }

    /// Log integrand in `t`.
    fn log_value(&self, pt: &UnitPoint) -> f64 {
        // ln(1 + g) = -ln(1 - t);  1 + g R = (1 - t + t R) / (1 - t)
        let ln_1p_g = -pt.ln_complement;
        let ln_1p_gr = (pt.complement + pt.t * self.ratio).ln() + ln_1p_g;
        self.half_residual_df * ln_1p_g - self.half_total_df * ln_1p_gr
            + self.prior.log_density_unit(pt)
    }

    fn at_logit(&self, u: f64) -> f64 {
        self.log_value(&UnitPoint::from_logit(u))
    }

    /// Approximate logit and height of the log integrand's maximum.
    fn peak(&self) -> (f64, f64) {
        const LO: f64 = -36.0;
        const HI: f64 = 36.0;
        const STEPS: usize = 720;
        let step = (HI - LO) / STEPS as f64;
        let (mut best_u, mut best) = (LO, f64::NEG_INFINITY);
        for i in 0..=STEPS {
            let u = LO + step * i as f64;
            let v = self.at_logit(u);
            if v > best {
                best = v;
                best_u = u;
            }
        }
        // golden-section refinement inside the bracketing grid cells
        let (mut lo, mut hi) = (best_u - step, best_u + step);
        let inv_phi = 0.618_033_988_749_894_9;
        for _ in 0..60 {
            let m1 = hi - inv_phi * (hi - lo);
            let m2 = lo + inv_phi * (hi - lo);
            if self.at_logit(m1) < self.at_logit(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let mid = 0.5 * (lo + hi);
        let v = self.at_logit(mid);
        if v > best {
            (mid, v)
        } else {
            (best_u, best)
        }
    }
}

/// `ln ∫_0^∞ exp(log_bf_integrand(g)) dg`, evaluated by adaptive quadrature.
///
/// The integrand is scaled by its peak before exponentiation, so large `n`
/// does not overflow.
pub fn log_bf_quadrature(
    n: usize,
    mean_params: usize,
    ratio: f64,
    prior: &BetaPrimePrior,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_integrand_args(n, mean_params, ratio)?;
    let integrand = UnitIntegrand::new(n, mean_params, ratio, *prior);
    let (u_peak, shift) = integrand.peak();
    if !shift.is_finite() {
        return Err(Error::Domain("integrand has no finite maximum".into()));
    }

    let log_f = |pt: UnitPoint| integrand.log_value(&pt) - shift;
    let integral =
        integrate_unit_interval_log(log_f, &[u_peak], spec).map_err(|err| match err {
            Error::Convergence {
                estimate,
                error_estimate,
                subdivisions,
            } => Error::Convergence {
                estimate: estimate.ln() + shift,
                error_estimate: error_estimate / estimate,
                subdivisions,
            },
            other => other,
        })?;
    Ok(integral.value.ln() + shift)
}

pub fn bf_quadrature(
    n: usize,
    mean_params: usize,
    ratio: f64,
    prior: &BetaPrimePrior,
    spec: &QuadratureSpec,
) -> Result<f64> {
    log_bf_quadrature(n, mean_params, ratio, prior, spec).map(f64::exp)
}

/// Log marginal density under `M_1` with the `1/sigma^2` reference prior:
/// `(1/2) ln n + ln G((n-1)/2) - ((n-1)/2) ln pi - ((n-1)/2) ln W_T`.
pub fn log_marginal_m1(n: usize, w_t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    if !(w_t > 0.0 && w_t.is_finite()) {
        return Err(Error::DegenerateData(format!(
            "total sum of squares must be positive and finite, got {w_t}"
        )));
    }
    let half_df = (n as f64 - 1.0) / 2.0;
    Ok(0.5 * (n as f64).ln() + ln_gamma(half_df)?
        - half_df * std::f64::consts::PI.ln()
        - half_df * w_t.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn density_examples() {
        let prior = BetaPrimePrior::new(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            beta_prime_log_density(&prior, 1.0).unwrap(),
            0.25f64.ln(),
            epsilon = 1e-14
        );
        let prior = BetaPrimePrior::new(-0.5, -0.5).unwrap();
        assert_abs_diff_eq!(
            beta_prime_log_density(&prior, 1.0).unwrap(),
            (1.0 / (2.0 * PI)).ln(),
            epsilon = 1e-13
        );
        assert!(beta_prime_log_density(&prior, 0.0).is_err());
        assert!(beta_prime_log_density(&prior, -1.0).is_err());
    }

    #[test]
    fn prior_validation() {
        assert!(BetaPrimePrior::new(-1.0, 0.0).is_err());
        assert!(BetaPrimePrior::new(0.0, -1.5).is_err());
        assert!(BetaPrimePrior::new(f64::NAN, 0.0).is_err());
        assert!(BetaPrimePrior::recommended(4, 2).is_ok());
        // n - k = 1 puts the closure b at -1
        assert!(BetaPrimePrior::recommended(3, 2).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let prior = BetaPrimePrior::new(-0.5, 3.5).unwrap();
        let mass = beta_prime_total_mass(&prior, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn integrand_at_unit_ratio() {
        let prior = BetaPrimePrior::new(-0.5, 1.5).unwrap();
        for g in [0.01, 1.0, 250.0] {
            let got = log_bf_integrand(12, 3, 1.0, &prior, g).unwrap();
            let expected = ((12.0 - 3.0) / 2.0 - (12.0 - 1.0) / 2.0) * (1.0_f64 + g).ln()
                + beta_prime_log_density(&prior, g).unwrap();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn integrand_term_by_term() {
        let prior = BetaPrimePrior::new(-0.5, 0.5).unwrap();
        let got = log_bf_integrand(4, 2, 0.5, &prior, 1.0).unwrap();
        // B(1/2, 3/2) = pi/2
        let density = 0.5 * 0.0 - 2.0 * 2f64.ln() - (PI / 2.0).ln();
        let expected = 1.0 * 2f64.ln() - 1.5 * 1.5f64.ln() + density;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-13);
    }

    #[test]
    fn integrand_vanishes_at_zero_for_positive_b() {
        let prior = BetaPrimePrior::new(-0.5, 2.0).unwrap();
        assert!(log_bf_integrand(10, 2, 0.5, &prior, 1e-300).unwrap() < -1000.0);
        assert!(log_bf_integrand(10, 2, 0.0, &prior, 1.0).is_err());
        assert!(log_bf_integrand(2, 2, 0.5, &prior, 1.0).is_err());
    }

    #[test]
    fn unit_integrand_matches_g_form() {
        let prior = BetaPrimePrior::new(0.3, 1.7).unwrap();
        let unit = UnitIntegrand::new(15, 4, 0.37, prior);
        for u in [-18.0, -1.4, 0.0, 2.2, 20.0] {
            let pt = UnitPoint::from_logit(u);
            let g: f64 = f64::exp(u);
            let jac = -2.0 * pt.ln_complement;
            let expected = log_bf_integrand(15, 4, 0.37, &prior, g).unwrap() + jac;
            assert_abs_diff_eq!(unit.log_value(&pt), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadrature_examples() {
        let spec = QuadratureSpec::default();
        let prior = BetaPrimePrior::new(-0.5, -0.5).unwrap();
        let bf = bf_quadrature(4, 2, 1.0, &prior, &spec).unwrap();
        assert_relative_eq!(bf, 2.0 / PI, max_relative = 1e-9);
                let bf = bf_quadrature(4, 2, 0.5, &prior, &spec).unwrap();
        assert_relative_eq!(bf, 0.900_316_316_2, max_relative = 1e-9);
    }

    #[test]
    fn hyper_g_evaluates() {
        let spec = QuadratureSpec::default();
        let prior = BetaPrimePrior::hyper_g(-0.5).unwrap();
        for (n, k) in [(4, 2), (10, 3), (40, 8)] {
            let lbf = log_bf_quadrature(n, k, 0.4, &prior, &spec).unwrap();
            assert!(lbf.is_finite());
        }
    }

    #[test]
    fn m1_marginal() {
        assert_abs_diff_eq!(log_marginal_m1(2, 2.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            log_marginal_m1(2, 1.0).unwrap(),
            0.5 * 2f64.ln(),
            epsilon = 1e-14
        );
        let base = log_marginal_m1(9, 3.0).unwrap();
        let scaled = log_marginal_m1(9, 3.0 * 7.0).unwrap();
        assert_abs_diff_eq!(scaled - base, -4.0 * 7f64.ln(), epsilon = 1e-12);
        assert!(matches!(
            log_marginal_m1(5, 0.0),
            Err(Error::DegenerateData(_))
        ));
    }
}
