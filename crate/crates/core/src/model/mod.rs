//! Shared domain types: documents, verdicts, stage accounting, token counting.

mod document;
mod reason;
mod stats;
mod tokenize;
mod verdict;

pub use document::Document;
pub use reason::{Reason, UnknownReason};
pub use stats::{merge_stats, StageStats};
pub use tokenize::{count_tokens, Tokenizer, TokenizerKind, TokenizerSpec};
pub use verdict::{Decision, Verdict};
