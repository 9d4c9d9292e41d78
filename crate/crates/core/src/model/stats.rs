use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Reason, Verdict};
use crate::error::{Error, Result};

/// Per-stage accounting. Workers accumulate their own copy and the copies
/// are folded with [`merge_stats`] at the end.
///
/// `tokens_dropped` counts tokens of dropped documents, so that for pure
/// filter stages `tokens_in == tokens_out + tokens_dropped`. Transforming
/// stages (extraction, PII scrubbing) legitimately change token totals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub seen: u64,
    pub kept: u64,
    #[serde(default)]
    pub dropped_by_reason: BTreeMap<String, u64>,
    #[serde(default)]
    pub tokens_in: u64,
    #[serde(default)]
    pub tokens_out: u64,
    #[serde(default)]
    pub tokens_dropped: u64,
}

impl StageStats {
    pub fn new(stage: &str) -> Self {
        StageStats {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped_by_reason.values().sum()
    }

    /// `kept + dropped == seen`
    pub fn is_balanced(&self) -> bool {
        self.kept + self.dropped() == self.seen
    }

    pub fn record_keep(&mut self, tokens_in: u64, tokens_out: u64) {
        self.seen += 1;
        self.kept += 1;
        self.tokens_in += tokens_in;
        self.tokens_out += tokens_out;
    }

    pub fn record_drop(&mut self, reason: Reason, tokens: u64) {
        self.seen += 1;
        *self.dropped_by_reason.entry(reason.code().to_string()).or_default() += 1;
        self.tokens_in += tokens;
        self.tokens_dropped += tokens;
    }

    /// Records a verdict for a document that is not rewritten by the stage.
    pub fn record(&mut self, verdict: &Verdict, tokens: u64) {
        match verdict.reason() {
            None => self.record_keep(tokens, tokens),
            Some(r) => self.record_drop(r, tokens),
        }
    }
}

/// Fieldwise sum of two stats for the same stage.
pub fn merge_stats(a: &StageStats, b: &StageStats) -> Result<StageStats> {
    if a.stage != b.stage {
        return Err(Error::contract(format!(
            "cannot merge stats of stage `{}` with stage `{}`",
            a.stage, b.stage
        )));
    }
    let mut out = a.clone();
    out.seen += b.seen;
    out.kept += b.kept;
    out.tokens_in += b.tokens_in;
    out.tokens_out += b.tokens_out;
    out.tokens_dropped += b.tokens_dropped;
    for (reason, n) in &b.dropped_by_reason {
        *out.dropped_by_reason.entry(reason.clone()).or_default() += n;
    }
    Ok(out)
}
