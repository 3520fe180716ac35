use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite sample rejected (poisoned stream)")]
    PoisonedStream,

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error(
        "step size {mu} violates the stability bound (mean convergence mu < {mu_max}, \
         A_n convergence mu < {mu_max_variance})"
    )]
    BoundViolation {
        mu: f64,
        mu_max: f64,
        mu_max_variance: f64,
    },

    #[error("{what} did not converge within {max_iters} iterations")]
    NonConvergence { what: &'static str, max_iters: u64 },

    #[error("wrong model variant: expected {expected}, got {got}")]
    WrongVariant {
        expected: &'static str,
        got: &'static str,
    },

    #[error("run {run_index} (seed {seed:#018x}) of filter '{filter}' failed: {source}")]
    Run {
        filter: String,
        run_index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(x: &[f64], y: f64) -> Result<()> {
    if y.is_finite() && x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::PoisonedStream)
    }
}
