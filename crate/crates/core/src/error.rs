//! Error taxonomy shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Basis too small for the requested state or operation.
    #[error("truncation error: tail mass {tail:.3e} exceeds budget {budget:.1e}")]
    Truncation { tail: f64, budget: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("propagator did not converge: {0}")]
    Convergence(String),

    /// Design matrix is rank deficient for the requested fit.
    #[error("singular fit: {0}")]
    SingularFit(String),

    /// No start of the nonlinear solver reached an acceptable residual.
    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("peak detection failed: {0}")]
    PeakNotFound(String),

    #[error("parse error at line {line}, column {col}: expected {expected}")]
    Parse {
        line: usize,
        col: usize,
        expected: String,
    },

    #[error("unknown unit '{0}' (frequencies take Hz|kHz|MHz, times take ns|us)")]
    UnknownUnit(String),

    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::UnknownUnit(_) | Error::DuplicateLabel(_) => 2,
            Error::Convergence(_) => 3,
            _ => 1,
        }
    }
}
