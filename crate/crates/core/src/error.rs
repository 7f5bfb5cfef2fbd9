use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in block `{block}` at iteration {iteration}")]
    NumericalBreakdown {
        block: &'static str,
        iteration: usize,
    },

    #[error("metric is indefinite: squared norm {value:e} below tolerance (scale {scale:e})")]
    IndefiniteMetric { value: f64, scale: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("instance sets differ between solvers: {0}")]
    InstanceMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
