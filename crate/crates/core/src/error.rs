use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("register of {n} spins exceeds the configured cap of {cap}")]
    TooManySpins { n: usize, cap: usize },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("matrix is not {property} (residual {residual:.3e})")]
    InvalidMatrix {
        property: &'static str,
        residual: f64,
    },

    #[error("negative delay {value} s at program step {step}")]
    NegativeDelay { step: usize, value: f64 },

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("rank deficient: numerical rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("{scheme} sequence has negative delay {value:.6e} s at delay index {index}")]
    NegativeSequenceDelay {
        scheme: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSystem(_)
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::TooManySpins { .. }
                | Error::NegativeDelay { .. }
                | Error::NegativeSequenceDelay { .. }
                | Error::DimensionMismatch { .. }
        )
    }
}
