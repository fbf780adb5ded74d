use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("point {0:?} is not on a codimension-one stratum")]
    NotCodim1([f64; 3]),
    #[error("tangency: the two adjacent normal components coincide")]
    Tangency,
    #[error("quadrant {0} has a non-constant component")]
    NonConstant(&'static str),
    #[error("degenerate reduced system: {0} vanishes")]
    DegenerateLambda(&'static str),
    #[error("no attracting equilibrium; drift on Σ00 is undefined")]
    UndefinedDrift,
    #[error("{0}")]
    WrongCase(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
