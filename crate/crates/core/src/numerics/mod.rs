//! Special functions and one-dimensional quadrature.

mod gamma;
mod quadrature;

pub use gamma::{ln_beta, ln_gamma, log_gamma_ratio_asymptotic, Regime};
pub use quadrature::{
    integrate, integrate_unit_interval, integrate_unit_interval_log, Integral, QuadratureSpec,
    UnitPoint,
};
