use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation and testing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A frequency or argument lies outside the domain of the function.
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The spectrum estimate carries no mass, so no quantile is defined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The closed-form Gaussian variance came out non-positive.
    #[error(
        "variance formula is inconsistent: bracket = {bracket:.6}, sigma^2 = {sigma_sq:.6} (must be > 0)"
    )]
    FormulaInconsistency { bracket: f64, sigma_sq: f64 },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_frequency(what: &'static str, omega: f64) -> Result<()> {
    if omega.is_finite() && (-std::f64::consts::PI..=std::f64::consts::PI).contains(&omega) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: omega,
            domain: "[-pi, pi]",
        })
    }
}

pub(crate) fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: p,
            domain: "[0, 1]",
        })
    }
}
