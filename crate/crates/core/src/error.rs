use std::path::PathBuf;

use thiserror::Error;

use crate::quadrature::QuadError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no bound states: lambda = {lambda} must exceed 1/2")]
    NoBoundStates { lambda: f64 },

    #[error("level {n} is not a bound state (n_max = {n_max})")]
    LevelOutOfRange { n: usize, n_max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadrature failed at t = {t}: {source}")]
    Kernel {
        t: f64,
        #[source]
        source: QuadError,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),

    #[error("trace has imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("density matrix is not positive: eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },

    #[error("truncation tolerance {eps} leaves no levels")]
    EmptyBasis { eps: f64 },

    #[error("no off-diagonal element exceeds the magnitude threshold {threshold:e}")]
    NoCoherences { threshold: f64 },

    #[error("wavefunction evaluation is not finite for level {n} at x = {x}")]
    Unstable { n: usize, x: f64 },

    #[error("malformed matrix text at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
