use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor extents do not line up for the requested operation.
    #[error("shape error: {0}")]
    Shape(String),
    /// An operation contract was violated (e.g. backward from a non-scalar).
    #[error("contract error: {0}")]
    Contract(String),
    /// A class label is out of range for the configured class count.
    #[error("label error: {0}")]
    Label(String),
    /// Malformed file content (PNM header, checkpoint, manifest).
    #[error("format error: {0}")]
    Format(String),
    /// Inconsistent or invalid run/model configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Attention similarities summed to a non-positive denominator.
    #[error("degenerate similarity: {0}")]
    DegenerateSimilarity(String),
    /// A metric is undefined for the given confusion matrix.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    /// Kappa z-test denominator is zero while the coefficients differ.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    /// Training produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
