use serde::{Deserialize, Serialize};

use super::Reason;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Drop,
}

/// Keep/drop decision emitted by a filter stage. A `Drop` always carries a
/// reason; a `Keep` never does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<Reason>,
    stage: String,
}

impl Verdict {
    pub fn keep(stage: &str) -> Self {
        Verdict {
            decision: Decision::Keep,
            reason: None,
            stage: stage.to_string(),
        }
    }

    pub fn drop(stage: &str, reason: Reason) -> Self {
        Verdict {
            decision: Decision::Drop,
            reason: Some(reason),
            stage: stage.to_string(),
        }
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn is_keep(&self) -> bool {
        self.decision == Decision::Keep
    }

    pub fn reason(&self) -> Option<Reason> {
        self.reason
    }

    /// The reason code string; empty for `Keep`.
    pub fn reason_code(&self) -> &'static str {
        self.reason.map(Reason::code).unwrap_or("")
    }

    pub fn stage(&self) -> &str {
        &self.stage
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_has_empty_reason() {
        let v = Verdict::keep("url");
        assert!(v.is_keep());
        assert_eq!(v.reason_code(), "");
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"decision":"keep","stage":"url"}"#);
    }

    #[test]
    fn drop_serializes_code() {
        let v = Verdict::drop("url", Reason::UrlBrDomain);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"decision":"drop","reason":"url:br_domain","stage":"url"}"#
        );
    }
}
