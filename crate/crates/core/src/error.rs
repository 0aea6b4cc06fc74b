use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range. `field` is the dotted
    /// config path when known (`detectors.snspd.efficiency`).
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("readout requested on a trial that was not heralded")]
    NotHeralded,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:.3e})")]
    NoConvergence { iterations: usize, residual_norm: f64 },

    #[error("schedule infeasible: {0}")]
    InfeasibleSchedule(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },

    #[error("schema error in column `{column}`: {reason}")]
    Schema { column: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

/// Joins a config prefix and a field name with a dot.
pub(crate) fn path(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

pub(crate) fn check_probability(prefix: &str, field: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(path(prefix, field), format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_efficiency(prefix: &str, field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invalid(path(prefix, field), format!("{v} is outside (0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_positive(prefix: &str, field: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::invalid(path(prefix, field), format!("{v} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_non_negative(prefix: &str, field: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) {
        return Err(Error::invalid(path(prefix, field), format!("{v} must be non-negative")));
    }
    Ok(())
}
