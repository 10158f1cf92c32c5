use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("`{what}` = {value} is outside the domain: {reason}")]
    Domain {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error(
        "quadrature did not reach tolerance {tolerance:e}: estimate {estimate}, \
         error estimate {error:e} after {intervals} intervals"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
        intervals: usize,
    },
    #[error("non-finite value produced for `{variable}`")]
    NonFinite { variable: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}
