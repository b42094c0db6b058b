use thiserror::Error;

/// Errors raised by the ring, field, coding and channel layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape length mismatch: {left} vs {right}")]
    ShapeLength { left: usize, right: usize },

    #[error("shape subtraction out of domain: {0}")]
    OutOfDomain(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),

    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),

    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("element {value} out of range for {context}")]
    ElementOutOfRange { value: u64, context: String },

    #[error("division by zero in the field")]
    ZeroInverse,

    #[error("matrix is not invertible")]
    NotInvertible,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row constraint violated: {0}")]
    RowConstraint(String),

    #[error("inconsistent system: {0}")]
    Inconsistent(String),

    #[error("enumeration of {needed} states exceeds the guard of {guard}")]
    GuardExceeded { needed: u128, guard: u128 },

    #[error("decoding failed at stage {stage}: {failure}")]
    StageFailure { stage: usize, failure: DecodeFailure },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Why a component decoder could not return a unique message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeFailure {
    /// Several codewords are consistent with the observation.
    #[error("ambiguous")]
    Ambiguous,
    /// No codeword is consistent with the observation.
    #[error("inconsistent")]
    Inconsistent,
}

pub type Result<T> = std::result::Result<T, Error>;
