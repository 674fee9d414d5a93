use thiserror::Error;

use crate::geometry::Point;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance singularity: {what} at ({x}, {y}) coincides with an access point", x = .at.x, y = .at.y)]
    Singularity { what: &'static str, at: Point },

    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature column {column} (ap_{ap}) has zero variance", ap = .column + 1)]
    ZeroVariance { column: usize },

    #[error("non-finite value in row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("nu * s = {product} < 1: too few training rows for nu")]
    NuTooSmall { product: f64 },

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NonConvergence { iterations: u64, violation: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error(
        "{count} candidate combinations exceed the limit of {limit}; raise the limit to enumerate anyway"
    )]
    CombinationLimit { count: u128, limit: u128 },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => ErrorKind::Io,
            Error::NonConvergence { .. } | Error::UndefinedCorrelation(_) => ErrorKind::Numerical,
            Error::Fold { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
