use thiserror::Error;

/// Evaluation regime of the scalar Mittag-Leffler evaluator, or the matrix
/// route attempted by the matrix evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Closed forms (alpha = 1 with integer beta).
    Closed,
    /// Power series around the origin.
    Series,
    /// Inverse Laplace transform on an optimal parabolic contour.
    Contour,
    /// Algebraic asymptotic expansion for large |z|.
    Asymptotic,
    /// Derivative recursion over shifted second indices.
    Recursion,
    /// Spectral decomposition of a matrix argument.
    Spectral,
    /// Shifted nilpotent expansion for triangular blocks with constant diagonal.
    Nilpotent,
    /// Truncated matrix Taylor series.
    MatrixSeries,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Regime::Closed => "closed form",
            Regime::Series => "power series",
            Regime::Contour => "contour integral",
            Regime::Asymptotic => "asymptotic expansion",
            Regime::Recursion => "derivative recursion",
            Regime::Spectral => "spectral decomposition",
            Regime::Nilpotent => "nilpotent expansion",
            Regime::MatrixSeries => "matrix series",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmlError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid phase-type generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid semi-Markov model: {0}")]
    InvalidSpec(String),

    #[error("evaluation failed in {regime}: {detail}")]
    Evaluation { regime: Regime, detail: String },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("exp transform overflows at indices {indices:?}")]
    Overflow { indices: Vec<usize> },

    #[error("semi-Markov path did not absorb within {jumps} jumps")]
    Runaway { jumps: u64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("document error: {0}")]
    Document(String),

    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),
}

impl MmlError {
    pub(crate) fn eval(regime: Regime, detail: impl Into<String>) -> Self {
        MmlError::Evaluation {
            regime,
            detail: detail.into(),
        }
    }

    /// True for errors that signal a numerical failure rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, MmlError::Evaluation { .. } | MmlError::Runaway { .. })
    }
}

pub type Result<T> = std::result::Result<T, MmlError>;
