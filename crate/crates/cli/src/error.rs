use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or option combination.
    #[error("usage: {0}")]
    Usage(String),

    /// Unreadable or malformed input data.
    #[error("input: {0}")]
    Input(String),

    /// Parameters or data that violate an estimator's requirements.
    #[error("constraint: {0}")]
    Constraint(String),

    #[error("output: {0}")]
    Output(String),

    /// The reader of standard output went away; not reported.
    #[error("broken pipe")]
    BrokenPipe,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Constraint(_) => 4,
            CliError::Output(_) => 5,
            CliError::BrokenPipe => 0,
        })
    }
}

impl From<jointq::Error> for CliError {
    fn from(e: jointq::Error) -> Self {
        match e {
            jointq::Error::Parse { .. } | jointq::Error::Io(_) => CliError::Input(e.to_string()),
            jointq::Error::Constraint(msg) => CliError::Constraint(msg),
            jointq::Error::InsufficientSamples { .. } => CliError::Constraint(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
