use alloc::string::String;

/// Errors raised by the identification pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dataset shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("dataset contains non-finite values")]
    NonFinite,
    #[error("degenerate signal: data equals its midrange everywhere")]
    DegenerateSignal,
    #[error("stride {stride} does not divide {count}")]
    StrideMismatch { stride: usize, count: usize },
    #[error("unsupported equation `{0}`")]
    UnsupportedEquation(String),
    #[error("library lacks feature {0}")]
    MissingFeature(String),
    #[error("derivative order {order} exceeds limit {limit} of the test function")]
    OrderTooHigh { order: usize, limit: usize },
    #[error("no valid test-function centers: half-width {halfwidth} on {cells} cells")]
    NoValidCenters { halfwidth: usize, cells: usize },
    #[error("unsupported spatial dimension {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty support")]
    EmptySupport,
    #[error("true coefficient vector is zero")]
    ZeroTruth,
}

pub type Result<T> = core::result::Result<T, Error>;
