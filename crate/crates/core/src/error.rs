//! Error type shared by the training and binning modules.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, CoreError>;

/// Errors surfaced by binning and training entry points.
///
/// Numeric edge cases inside the algorithms (unsplittable nodes, skipped
/// split candidates) are not errors; they fall back to the documented
/// degenerate behaviour instead.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A feature value was NaN or infinite. `feature` is the column index,
    /// `row` the offending sample when known.
    NonFinite { feature: usize, row: usize },
    /// Empty dataset, zero features, or ragged inputs.
    EmptyData(String),
    /// A configuration value violates its documented range.
    InvalidConfig(String),
    /// Label set does not satisfy the classifier's requirements.
    InvalidLabels(String),
    /// Prediction input does not match the model's feature count.
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::NonFinite { feature, row } => {
                write!(f, "non-finite value in feature {feature} at row {row}")
            }
            CoreError::EmptyData(msg) => write!(f, "empty data: {msg}"),
            CoreError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            CoreError::InvalidLabels(msg) => write!(f, "invalid labels: {msg}"),
            CoreError::DimensionMismatch { expected, got } => {
                write!(
                    f,
                    "dimension mismatch: model expects {expected} features, got {got}"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
