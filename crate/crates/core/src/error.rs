use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("column `{column}` is constant; min-max scaling needs max > min")]
    ConstantColumn { column: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("{estimator}: solver returned {status:?}")]
    Solver { estimator: String, status: LpStatus },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fold {fold} has an empty training set")]
    EmptyTrainingSet { fold: usize },

    #[error("every hyperparameter candidate failed")]
    AllCandidatesFailed,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
