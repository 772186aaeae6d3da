use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate doc_id `{0}`")]
    DuplicateDocId(String),

    #[error("doc_id must be non-empty")]
    EmptyDocId,

    #[error("unknown doc_id `{0}`")]
    UnknownDoc(String),

    #[error("k must be positive")]
    ZeroDepth,

    #[error("index is empty")]
    EmptyIndex,

    #[error("query has no indexable terms")]
    EmptyQuery,

    #[error("invalid weight {weight} for term `{term}`: weights must be finite and > 0")]
    InvalidWeight { term: String, weight: f64 },

    #[error("ranks are 1-based, got 0")]
    ZeroRank,

    #[error("no feature vector for ranked doc `{0}`")]
    MissingFeatures(String),

    #[error("need at least 2 ranked documents to form pairs, got {0}")]
    TooFewDocs(usize),

    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("duplicate doc_id `{0}` within a ranking")]
    DuplicateInList(String),

    #[error("ranking must be non-empty")]
    EmptyList,

    #[error("query_id mismatch: `{expected}` vs `{found}`")]
    QueryIdMismatch { expected: String, found: String },

    #[error("need at least {need} ranked lists, got {got}")]
    TooFewLists { need: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("teacher returned {got} scores for a batch of {expected} (batch {batch})")]
    ScoreCountMismatch { batch: usize, expected: usize, got: usize },

    #[error("teacher returned non-finite score at position {position} (batch {batch})")]
    NonFiniteScore { batch: usize, position: usize },

    #[error("remote teacher request failed for batch {batch} after {attempts} attempts: {message}")]
    Remote { batch: usize, attempts: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("corrupt index file: {0}")]
    CorruptIndex(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
