//! Merging a fast causal stream of streaming-ASR partial results with a
//! delayed, more accurate cascaded stream.
//!
//! [`merge`] holds the rewriting engine, [`align`] the variable-endpoint
//! Levenshtein machinery it relies on, [`metrics`] the partial-result quality
//! and stability measures, [`simgen`] a deterministic two-stream simulator and
//! [`logio`] the JSON-lines event log format tying them together.

pub mod align;
pub mod error;
pub mod eval;
pub mod logio;
pub mod merge;
pub mod metrics;
pub mod simgen;
pub mod tokens;

pub use align::{AlignmentOutcome, EditOp};
pub use error::{Error, Result};
pub use logio::{Kind, Origin, ResultEvent, UtteranceLog};
pub use merge::{MergeParams, MergeSession, MergeState};
pub use metrics::MetricsReport;
pub use simgen::SimConfig;
pub use tokens::{TokenSeq, Tokenizer, WhitespaceTokenizer};
