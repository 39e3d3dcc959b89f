//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Stream does not start with the ZMAT magic.
    #[error("bad magic {found:?}, expected \"ZMAT\"")]
    Format { found: [u8; 4] },

    /// ZMAT version other than 1.
    #[error("unsupported ZMAT version {found}, expected 1")]
    UnsupportedVersion { found: u32 },

    /// Payload shorter or longer than the header declares, or a size overflow.
    #[error("corrupt matrix stream: {0}")]
    Corrupt(String),

    /// Non-finite entry in a loaded matrix; reports the first offending index.
    #[error("invalid value {value} at ({row}, {col})")]
    InvalidValue { row: usize, col: usize, value: f64 },

    /// Malformed or incomplete dataset manifest.
    #[error("manifest error: {0}")]
    Manifest(String),

    /// Seen/unseen class sets overlap or do not cover all classes.
    #[error("split error: {0}")]
    Split(String),

    /// Dimension mismatch between two objects; the message names both.
    #[error("shape error: {0}")]
    Shape(String),

    /// Synthetic generator could not produce distinct prototypes.
    #[error("degenerate synthesis: {0}")]
    DegenerateSynthesis(String),

    /// A node degree is negative; adjacency weights must be rescaled into a
    /// nonnegative range before normalization.
    #[error(
        "negative degree {degree} at node {node}; rescale the covariance into a \
         nonnegative range before normalizing"
    )]
    NegativeDegree { node: usize, degree: f64 },

    /// `I - alpha*S` is numerically singular.
    #[error("singular diffusion system: I - alpha*S is not invertible")]
    SingularDiffusion,

    /// Training produced a non-finite loss or gradient.
    #[error("divergence at epoch {epoch} (learning rate {learning_rate}): {what}")]
    Divergence {
        epoch: usize,
        learning_rate: f64,
        what: String,
    },

    /// Training set is empty.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Prediction requested over an empty candidate set.
    #[error("empty search space")]
    EmptySearchSpace,

    /// A label is non-integral, out of range, or outside its declared split.
    #[error("label error: {0}")]
    Label(String),

    /// Scalar argument outside its documented range.
    #[error("range error: {0}")]
    Range(String),

    /// Generalized evaluation requires a seen-class test split.
    #[error("missing seen test split: generalized evaluation needs features_test_seen")]
    MissingSeenTestSplit,

    /// Invalid run or synthesis configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
