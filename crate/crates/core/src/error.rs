use thiserror::Error;

/// Errors produced by the rule-ensemble library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {0} is not in {{0, 1}}")]
    InvalidLabel(f64),

    #[error("all labels belong to a single class")]
    DegenerateLabels,

    #[error("loss {0:?} has no gradient")]
    UnsupportedLoss(crate::loss::LossKind),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dataset too small: {0} usable rows")]
    DatasetTooSmall(usize),

    #[error("task mismatch: model is {model:?}, data is {data:?}")]
    TaskMismatch {
        model: crate::rules::Task,
        data: crate::rules::Task,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
