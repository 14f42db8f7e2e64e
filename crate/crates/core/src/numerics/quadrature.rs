use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ss::CompensatedSum;
use crate::{Error, Result};

/// Tolerances and work limit for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals held at once.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be positive, got abs={} rel={}",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Domain("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

// Kronrod 15-point abscissae and weights; every other abscissa (starting at
// index 1) is a 7-point Gauss node.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Gauss-Kronrod 7/15 rule on `[lo, hi]`. All nodes are strictly interior.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite on [{lo:e}, {hi:e}]"
        )));
    }
    Ok(Segment {
        lo,
        hi,
        value,
        error,
    })
}

/// A point of the open unit interval with `t` and `1 - t` both held at full
/// relative precision, together with their logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub t: f64,
    pub complement: f64,
    pub ln_t: f64,
    pub ln_complement: f64,
}

impl UnitPoint {
    /// The point with `ln(t / (1 - t)) = logit`.
    pub fn from_logit(logit: f64) -> Self {
        let ln_t = -softplus(-logit);
        let ln_complement = -softplus(logit);
        UnitPoint {
            t: ln_t.exp(),
            complement: ln_complement.exp(),
            ln_t,
            ln_complement,
        }
    }
}

/// Logit range covered by the substitution. Mass of `t^c` below `e^{-400}`
/// is `e^{-400(c + 1)} / (c + 1)`, negligible for any `c` not crowding `-1`.
const MAX_LOGIT: f64 = 400.0;

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Maps `x` to `t = logistic(pi sinh x)` and returns the point with the log
/// of `dt/dx`.
fn unit_map(x: f64) -> (UnitPoint, f64) {
    let point = UnitPoint::from_logit(std::f64::consts::PI * x.sinh());
    let ln_jacobian = point.ln_t + point.ln_complement + (std::f64::consts::PI * x.cosh()).ln();
    (point, ln_jacobian)
}

fn logit_to_x(logit: f64) -> f64 {
    (logit / std::f64::consts::PI).asinh()
}

/// Adaptive integration of `f` over `[0, 1]`.
///
/// Integrable endpoint singularities such as `t^c` with `c > -1` at the lower
/// end are handled by a double-exponential change of variable. `f` only sees
/// `t`, which cannot resolve points closer to 1 than `f64::EPSILON`; use
/// [`integrate_unit_interval_log`] for integrands singular at the upper end.
pub fn integrate_unit_interval<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    let g = |x: f64| {
        let (point, ln_jacobian) = unit_map(x);
        let value = f(point.t);
        if value == 0.0 {
            0.0
        } else {
            value * ln_jacobian.exp()
        }
    };
    let edge = logit_to_x(MAX_LOGIT);
    integrate(g, &[-edge, 0.0, edge], spec).map(|i| i.value)
}

/// Integral over `(0, 1)` of `exp(log_f(point))`.
///
/// The Jacobian of the change of variable is added to `log_f` before
/// exponentiating, so integrands whose factors overflow separately are safe.
/// `logit_breaks` are extra breakpoints given as `ln(t / (1 - t))`, useful at
/// a sharp peak.
pub fn integrate_unit_interval_log<F: Fn(UnitPoint) -> f64>(
    log_f: F,
    logit_breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let g = |x: f64| {
        let (point, ln_jacobian) = unit_map(x);
        let ln_value = log_f(point);
        if ln_value == f64::NEG_INFINITY {
            0.0
        } else {
            (ln_value + ln_jacobian).exp()
        }
    };
    let edge = logit_to_x(MAX_LOGIT);
    let mut points = vec![-edge, 0.0, edge];
    points.extend(
        logit_breaks
            .iter()
            .filter(|u| u.is_finite() && u.abs() < MAX_LOGIT)
            .map(|&u| logit_to_x(u)),
    );
    points.sort_by(f64::total_cmp);
    points.dedup();
    integrate(g, &points, spec)
}

/// Adaptive integration over `[points[0], points[last]]`, with the given
/// interior points as initial breakpoints.
///
/// The subinterval with the largest error estimate is bisected until the
/// total estimated error falls below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    spec.validate()?;
    if points.len() < 2 || points.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Domain(
            "breakpoints must be strictly increasing with at least two entries".into(),
        ));
    }

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        heap.push(gauss_kronrod(&f, w[0], w[1])?);
    }
    // Segments too narrow to bisect further.
    let mut frozen: Vec<Segment> = Vec::new();

    loop {
        let (value, error) = totals(heap.iter().chain(frozen.iter()));
        let subdivisions = heap.len() + frozen.len();
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error_estimate: error,
                subdivisions,
            });
        }
        let worst = match heap.pop() {
            Some(seg) if subdivisions < spec.max_subdivisions => seg,
            _ => {
                return Err(Error::Convergence {
                    estimate: value,
                    error_estimate: error,
                    subdivisions,
                })
            }
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) {
            frozen.push(worst);
            continue;
        }
        heap.push(gauss_kronrod(&f, worst.lo, mid)?);
        heap.push(gauss_kronrod(&f, mid, worst.hi)?);
    }
}

fn totals<'a>(segments: impl Iterator<Item = &'a Segment>) -> (f64, f64) {
    let mut value = CompensatedSum::default();
    let mut error = 0.0;
    for seg in segments {
        value.add(seg.value);
        error += seg.error;
    }
    (value.value(), error)
}
