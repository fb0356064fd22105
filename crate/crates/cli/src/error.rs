use std::path::Path;

use mml::MmlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] MmlError),

    #[error("{path}: {detail}")]
    Io { path: String, detail: String },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Usage(String),

    #[error("fit did not converge (best NLL {nll:?}); results were written")]
    NotConverged { nll: f64 },
}

impl CliError {
    pub fn io(path: &Path, detail: impl Into<String>) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            detail: detail.into(),
        }
    }

    /// 2 for invalid input, 3 for numerical failures, 4 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(MmlError::NoConvergence(_)) | CliError::NotConverged { .. } => 4,
            CliError::Model(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}
