use crate::node::NodeId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stake amount must be positive, got {0}")]
    NonPositiveStake(i64),
    #[error("unknown account {0}")]
    UnknownAccount(NodeId),
    #[error("token arithmetic overflow on account {0}")]
    TokenOverflow(NodeId),
    #[error("non-finite value {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("value {value} at coordinate {index} is outside the fixed-point range")]
    OutOfRange { index: usize, value: f64 },
    #[error("no updates to aggregate")]
    EmptyUpdates,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("dataset has role {actual:?}, expected {expected:?}")]
    WrongDatasetRole {
        expected: crate::task::DatasetRole,
        actual: crate::task::DatasetRole,
    },
    #[error("non-finite metric (new {new}, old {old})")]
    NonFiniteMetric { new: f64, old: f64 },
    #[error("need {needed} eligible nodes, only {available} available")]
    InsufficientEligible { needed: usize, available: usize },
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        }
    }
}
