use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input value {0}")]
    NonFinite(f64),

    #[error("impact derivative of order {order} is singular at v = 0 (delta = {delta})")]
    Singular { order: u8, delta: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("concave-convex impact with d = 0 has no inflection point")]
    NoInflection,

    #[error("root search failed: {0}")]
    SearchFailure(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("lambda calibration failed: best lambda {best_lambda:e} leaves constraint gap {gap:e}")]
    Calibration { best_lambda: f64, gap: f64 },

    #[error("no positive root for the constant initial guess at lambda = {0:e}")]
    InitialGuess(f64),

    #[error("linear system is singular or not positive definite")]
    SingularSystem,

    #[error("point is not stationary: projected gradient norm {norm:e} exceeds {tolerance:e}")]
    NotStationary { norm: f64, tolerance: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(v))
    }
}

pub(crate) fn all_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&bad) => Err(Error::NonFinite(bad)),
        None => Ok(()),
    }
}
