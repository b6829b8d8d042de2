use thiserror::Error;

/// Errors raised by the estimators, trackers and I/O helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or initial state violates an ordering/positivity requirement.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// Not enough samples to initialise a tracker from data.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// Malformed input data; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Constraint(format!("{name} must lie in (0, 1), got {p}")))
    }
}
