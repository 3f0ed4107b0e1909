use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has dimension zero")]
    EmptyMatrix,

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator family is empty")]
    EmptyFamily,

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure in {stage}: {detail} (residual {residual:.3e})")]
    NumericalFailure {
        stage: String,
        detail: String,
        residual: f64,
    },

    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("oracle disagreement: {0}")]
    OracleDisagreement(String),

    #[error("instance construction failed: {0}")]
    ConstructionFailure(String),
}

impl Error {
    pub(crate) fn numerical(stage: &str, detail: impl Into<String>, residual: f64) -> Self {
        Error::NumericalFailure {
            stage: stage.to_string(),
            detail: detail.into(),
            residual,
        }
    }
}
