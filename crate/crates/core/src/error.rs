use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty token at position {0}")]
    EmptyToken(usize),

    #[error("split point {j_star} is outside the causal sequence of length {len}")]
    SplitOutOfRange { j_star: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("final result from the causal stream at t={time_ms}ms")]
    CausalFinal { time_ms: u64 },

    #[error("event {index} at t={time_ms}ms is out of order")]
    EventsOutOfOrder { index: usize, time_ms: u64 },

    #[error("utterance {utterance_id}: {source}")]
    Utterance {
        utterance_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("utterance {utterance_id}: event {index} at t={time_ms}ms is out of order")]
    OutOfOrder {
        utterance_id: String,
        index: usize,
        time_ms: u64,
    },

    #[error("utterance {utterance_id}: more than one final result")]
    DuplicateFinal { utterance_id: String },

    #[error("utterance {utterance_id}: more than one reference record")]
    DuplicateReference { utterance_id: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing reference transcript for utterance(s): {}", .0.join(", "))]
    MissingReference(Vec<String>),

    #[error("empty reference transcript")]
    EmptyReference,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
