use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimators, solvers and loaders in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("non-finite coordinate at point {point}, axis {axis}")]
    NonFinite { point: usize, axis: usize },

    #[error("mixture parameter p must lie in (0, 1), got {0}")]
    InvalidP(f64),

    #[error("k = {k} exceeds the {available} available neighbors")]
    KTooLarge { k: usize, available: usize },

    #[error("k must be at least 1")]
    ZeroK,

    #[error("k must be at least 1 (l = {l} maps to K(l) = 0)")]
    KTooSmall { l: f64 },

    #[error("l values {first} and {second} both map to K(l) = {k}")]
    KCollision { first: f64, second: f64, k: usize },

    #[error("point index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("invalid l values: {0}")]
    InvalidLValues(String),

    #[error("constraint system is numerically singular (reciprocal condition {rcond:e})")]
    SingularConstraints { rcond: f64 },

    #[error("quadrature supports at most 3 non-separable axes, got {0}")]
    DimTooHigh(usize),

    #[error("Bayes error bounds are only available for p = 0.5, got {0}")]
    UnsupportedP(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("rejection sampler stalled: acceptance rate {rate:e} after {attempts} draws")]
    RejectionStall { rate: f64, attempts: u64 },

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: parse error at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row} has no label column")]
    LabelMissing { path: PathBuf, row: usize },

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("invalid class pair: {0:?} requested twice")]
    InvalidPair(String),

    #[error("nothing to write: result list is empty")]
    EmptyResults,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable, machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyCloud => "EmptyCloud",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidP(_) => "InvalidP",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::ZeroK => "ZeroK",
            Error::KTooSmall { .. } => "KTooSmall",
            Error::KCollision { .. } => "KCollision",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::TooFewPoints(_) => "TooFewPoints",
            Error::InvalidLValues(_) => "InvalidLValues",
            Error::SingularConstraints { .. } => "SingularConstraints",
            Error::DimTooHigh(_) => "DimTooHigh",
            Error::UnsupportedP(_) => "UnsupportedP",
            Error::InvalidDistribution(_) => "InvalidDistribution",
            Error::RejectionStall { .. } => "RejectionStall",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::Parse { .. } => "ParseError",
            Error::RaggedRows { .. } => "RaggedRows",
            Error::LabelMissing { .. } => "LabelMissing",
            Error::UnknownClass(_) => "UnknownClass",
            Error::InvalidPair(_) => "InvalidPair",
            Error::EmptyResults => "EmptyResults",
            Error::Io(_) => "IoError",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularConstraints { .. } | Error::RejectionStall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
