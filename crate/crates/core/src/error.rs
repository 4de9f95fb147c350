use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: parameters, config, files.
    Input,
    /// A solver or integrator failed.
    Numerical,
    /// The physics does not satisfy a precondition (no metastable gap, cutoff not converged).
    Physics,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("steady state is not unique: {0}")]
    AmbiguousSteadyState(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Fock cutoff {cutoff} too small: {reason}")]
    InsufficientCutoff { cutoff: usize, reason: String },

    #[error("no metastable window: {0}")]
    NoMetastableWindow(String),

    #[error("cutoff did not converge up to D = {max_cutoff} (population drift {drift:.3e})")]
    CutoffNotConverged { max_cutoff: usize, drift: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::Parse { .. }
            | Error::Config(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::Singular(_)
            | Error::NoConvergence(_)
            | Error::Numerical(_)
            | Error::AmbiguousSteadyState(_) => ErrorKind::Numerical,
            Error::InsufficientCutoff { .. }
            | Error::NoMetastableWindow(_)
            | Error::CutoffNotConverged { .. } => ErrorKind::Physics,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
