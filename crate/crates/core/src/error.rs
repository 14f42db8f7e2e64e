use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("unbalanced design: {0}")]
    Balance(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    Convergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
