//! Error type shared across the crate, with a stable mapping to CLI exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support error: {0}")]
    Support(String),

    #[error("marginal consistency error: {0}")]
    Consistency(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible epsilon: {conditional} at y={y}, entry {index} = {value:.6e} < 0")]
    InfeasibleEpsilon {
        conditional: &'static str,
        y: usize,
        index: usize,
        value: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable exit-code contract: 0 success, 2 parse, 3 validation,
    /// 4 infeasible epsilon, 5 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::InvalidPmf(_)
            | Error::InvalidChannel(_)
            | Error::InvalidJoint(_)
            | Error::DimensionMismatch(_)
            | Error::Support(_)
            | Error::Consistency(_)
            | Error::Conditioning(_)
            | Error::Validation(_)
            | Error::Domain(_) => 3,
            Error::InfeasibleEpsilon { .. } => 4,
            Error::Numerical(_) => 5,
        }
    }
}
