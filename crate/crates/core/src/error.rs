use thiserror::Error;

use crate::index::MomentIndex;
use crate::model::MeasureTag;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation degrees: {0}")]
    InvalidDegrees(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("initial data is not conjugate-symmetric at frequency {0}")]
    NonRealInitialData(i32),

    #[error("missing {measure:?} moment {index}")]
    MissingMoment { measure: MeasureTag, index: MomentIndex },

    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("time step {0} does not divide the unit interval")]
    InvalidStep(f64),

    #[error("non-finite state at t = {time} (mode {mode})")]
    NonFinite { time: f64, mode: i32 },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
