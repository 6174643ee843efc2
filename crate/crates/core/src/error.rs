//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate address `{0}` in dataset")]
    DuplicateAddress(String),

    #[error("contract record is missing a non-empty `{field}` (address `{address}`)")]
    EmptyField { address: String, field: String },

    #[error("need at least {needed} contracts, got {got}")]
    TooFewContracts { needed: usize, got: usize },

    #[error("test_fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),

    #[error("fetch {url}: {message}")]
    Fetch { url: String, message: String },

    #[error("fetch {url}: http status {status}")]
    FetchStatus { url: String, status: u16 },

    #[error("fetch {url}: empty source")]
    EmptySource { url: String },

    #[error("no files to merge")]
    NoFiles,

    #[error("unterminated block comment at offset {0}")]
    UnterminatedComment(usize),

    #[error("unbalanced braces at offset {0}")]
    UnbalancedBraces(usize),

    #[error("embedding dimension must be at least 2, got {0}")]
    BadDimension(usize),

    #[error("cannot encode empty text")]
    EmptyText,

    #[error("all token contributions cancelled; refusing to emit a zero embedding")]
    ZeroEmbedding,

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("duplicate embedding key `{0}`")]
    DuplicateKey(String),

    #[error("no embedding stored for key `{key}` ({context})")]
    MissingEmbedding { key: String, context: String },

    #[error("encoder failed on function `{name}`: {source}")]
    EncodeFunction {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least {needed} distinct embeddings, got {got}")]
    TooFewDistinct { needed: usize, got: usize },

    #[error("need at least {needed} points to train on, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("k-means model has no centroids")]
    EmptyModel,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires the {expected} variant, model is {got}")]
    WrongVariant { expected: String, got: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("training data is empty")]
    EmptyData,

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("empty counts: nothing to evaluate")]
    EmptyCounts,

    #[error("{path}: unsupported artifact: expected `{expected}`, found `{found}`")]
    WrongArtifact {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::MalformedLine {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
