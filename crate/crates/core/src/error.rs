use thiserror::Error;

/// Errors produced by parsing, validation, and the numeric kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus or pool file failed to parse. Lines are 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A structural invariant was violated.
    #[error("{0}")]
    Validation(String),

    /// A sample is missing gold edits where they are required.
    #[error("sample {index} has no gold edits; run extract_edits first")]
    MissingGoldEdits { index: usize },

    /// A correction segment was looked up in a pool that does not contain it.
    #[error("correction segment not in pool: {0:?}")]
    UnknownCorrection(Vec<String>),

    /// An operation that needs at least one pattern was given an empty pool.
    #[error("pattern pool is empty")]
    EmptyPool,

    /// Two pools share no error patterns, so a restricted divergence is undefined.
    #[error("disjoint pattern supports")]
    DisjointSupports,

    /// Two aligned inputs have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Prediction sequences disagree in positions or vocabulary size.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A target index points outside the vocabulary.
    #[error("target index {index} out of range for vocabulary of size {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },

    /// An augmenter chain or parameter set is not usable as configured.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
