use thiserror::Error;

/// Errors raised by the laboratory's numerical and experiment routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("interface parameter mismatch: test function has lambda = {function}, medium has lambda = {medium}")]
    LambdaMismatch { function: f64, medium: f64 },

    #[error("singular linear system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}

pub fn require_finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(field, format!("must be finite, got {value}")))
    }
}

pub fn require_positive(field: &'static str, value: f64) -> Result<f64> {
    require_finite(field, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(field, format!("must be positive, got {value}")))
    }
}

pub fn require_open_unit(field: &'static str, value: f64) -> Result<f64> {
    require_finite(field, value)?;
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::domain(
            field,
            format!("must lie strictly between 0 and 1, got {value}"),
        ))
    }
}
