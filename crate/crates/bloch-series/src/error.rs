//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by geometry validation, numerical kernels and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The problem statement is inconsistent (overlapping inclusions, bad keys, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A discretization is too coarse to resolve the requested quantity.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A factorization, eigensolver or root finder failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The contour used for spectral projections is not admissible.
    #[error("contour error: {0}")]
    Contour(String),

    /// The spectral projection has a different rank than the requested group.
    #[error("multiplicity error: expected rank {expected}, found {found}")]
    Multiplicity { expected: usize, found: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    /// Prefixes the message with the context in which the error surfaced.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Contract(m) => Error::Contract(format!("{ctx}: {m}")),
            Error::Resolution(m) => Error::Resolution(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Contour(m) => Error::Contour(format!("{ctx}: {m}")),
            Error::Serialization(m) => Error::Serialization(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
