//! Bayes factors for balanced one-way and two-way ANOVA.
//!
//! The fully-Bayes factor uses a Zellner g-prior on the treatment effects
//! mixed over a beta-prime hyperprior whose second shape parameter is tied to
//! the sample size, which makes the marginal density available in closed
//! form. Everything depends on the data only through ANOVA sums of squares.
//!
//! Modules:
//!
//! * [`data`]: balanced datasets and CSV ingestion
//! * [`ss`]: sums-of-squares decompositions
//! * [`numerics`]: log-gamma, log-beta, unit-interval quadrature
//! * [`bayes_factor`]: closed-form fully-Bayes and BIC log Bayes factors
//! * [`prior`]: beta-prime hyperprior and the quadrature oracle
//! * [`consistency`]: asymptotic diagnostics and thresholds
//! * [`simulation`]: seeded Monte Carlo selection-frequency experiments

pub mod bayes_factor;
pub mod consistency;
pub mod data;
mod error;
pub mod numerics;
pub mod prior;
pub mod simulation;
pub mod ss;

pub use error::{Error, Result};
