use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no rows")]
    Empty,

    #[error("invalid `{field}`: {msg}")]
    Param { field: &'static str, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("point {index} has zero degree")]
    ZeroDegree { index: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-one update at point {index} is singular (denominator {denom:e})")]
    SingularUpdate { index: usize, denom: f64 },

    #[error("impact denominator vanishes at point {index}")]
    SingularImpact { index: usize },

    #[error("point {0} is already labeled")]
    AlreadyLabeled(usize),

    #[error("point index {index} out of range for n = {n}")]
    OutOfRange { index: usize, n: usize },

    #[error("no unlabeled points remain")]
    Exhausted,

    #[error("n = {n} exceeds the dense reference cap of {cap}; use the linearized engine")]
    TooLarge { n: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(field: &'static str, msg: impl Into<String>) -> Error {
    Error::Param {
        field,
        msg: msg.into(),
    }
}
