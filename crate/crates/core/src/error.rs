use std::path::PathBuf;

use thiserror::Error;

use crate::semantic::EmbedError;
use crate::simplifier::ExtractError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The text has no word tokens, so per-word and per-sentence metrics are undefined.
    #[error("degenerate document: {0}")]
    DegenerateDocument(&'static str),

    #[error("resource not found: {}", path.display())]
    MissingResource { path: PathBuf },

    #[error("malformed resource {source_id} at line {line}: {reason}")]
    MalformedResource {
        source_id: String,
        line: usize,
        reason: String,
    },

    #[error("malformed record at line {line}, field `{field}`: {reason}")]
    MalformedRecord {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("duplicate record id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("paired differences are constant and non-zero (mean {mean_diff}); t is undefined")]
    DegenerateVariance { mean_diff: f64 },

    #[error("empty test family")]
    EmptyFamily,

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("invalid grade `{0}` (expected Good, Acceptable or Poor)")]
    InvalidGrade(String),

    #[error("invalid annotation dimension `{0}`")]
    InvalidDimension(String),

    #[error("embedding mismatch: {0}")]
    ProviderMismatch(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error(transparent)]
    Embed(#[from] EmbedError),

    #[error(transparent)]
    Extract(#[from] ExtractError),

    #[error("simplifier endpoint failed after {attempts} attempt(s): {message}")]
    Endpoint {
        attempts: u32,
        message: String,
        last_payload: Option<String>,
    },

    #[error("no system output for {} record(s): {}", .0.len(), .0.join(", "))]
    MissingOutput(Vec<String>),

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("record `{id}`: {source}")]
    Record {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal numeric error: {0}")]
    Numeric(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
