use thiserror::Error;

use crate::balance::TraceRecord;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration produced a non-finite state at step {step}")]
    Integration { step: usize },

    #[error("adaptation diverged at step {step}")]
    Diverged { step: usize, trace: Vec<TraceRecord> },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("unsupported dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable short name of the variant, used in result tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DivisionByZero(_) => "division_by_zero",
            Error::Domain(_) => "domain",
            Error::Input(_) => "input",
            Error::Dimension { .. } => "dimension",
            Error::Numerical(_) => "numerical",
            Error::Integration { .. } => "integration",
            Error::Diverged { .. } => "diverged",
            Error::Degenerate(_) => "degenerate",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
