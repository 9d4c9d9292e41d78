//! Field-mapping adapters that turn heterogeneous dataset rows into
//! [`SftEntry`] values. Each source is described by data, not code.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Message, Role, SftEntry};
use crate::error::{Error, Result};

/// Where each `SftEntry` field lives in a source row. Paths are
/// dot-separated object keys. A row either has a message list
/// (`messages`, with `role`/`content` keys inside each item) or a single
/// `prompt`/`response` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMap {
    pub id: String,
    pub messages: Option<String>,
    pub role: String,
    pub content: String,
    pub prompt: Option<String>,
    pub response: Option<String>,
    pub system: Option<String>,
    pub language: Option<String>,
    pub quality_score: Option<String>,
    pub tokens: Option<String>,
    /// Role names in the source mapped onto ours, e.g. `human = "user"`.
    pub role_names: std::collections::BTreeMap<String, Role>,
    /// Language tag for rows without one.
    pub default_language: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            id: "id".into(),
            messages: Some("messages".into()),
            role: "role".into(),
            content: "content".into(),
            prompt: None,
            response: None,
            system: None,
            language: Some("lang".into()),
            quality_score: Some("quality_score".into()),
            tokens: Some("tokens".into()),
            role_names: Default::default(),
            default_language: "por".into(),
        }
    }
}

fn lookup<'a>(row: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(row, |v, k| v.get(k))
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl FieldMap {
    fn role(&self, name: &str) -> Option<Role> {
        if let Some(r) = self.role_names.get(name) {
            return Some(*r);
        }
        match name.to_ascii_lowercase().as_str() {
            "system" => Some(Role::System),
            "user" | "human" => Some(Role::User),
            "assistant" | "gpt" | "model" => Some(Role::Assistant),
            _ => None,
        }
    }

    pub fn adapt(&self, row: &Value, source: &str) -> Result<SftEntry> {
        let id = lookup(row, &self.id)
            .and_then(as_text)
            .ok_or_else(|| Error::data(format!("{source}: row without `{}`", self.id)))?;
        let mut messages = Vec::new();
        if let Some(sys) = self.system.as_deref().and_then(|p| lookup(row, p)).and_then(as_text) {
            if !sys.trim().is_empty() {
                messages.push(Message::new(Role::System, sys));
            }
        }
        match (&self.messages, &self.prompt, &self.response) {
            (_, Some(p), Some(r)) => {
                let get = |k: &str| {
                    lookup(row, k)
                        .and_then(as_text)
                        .ok_or_else(|| Error::data(format!("{source}/{id}: missing `{k}`")))
                };
                messages.push(Message::new(Role::User, get(p)?));
                messages.push(Message::new(Role::Assistant, get(r)?));
            }
            (Some(m), _, _) => {
                let list = lookup(row, m)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::data(format!("{source}/{id}: `{m}` is not a list")))?;
                for item in list {
                    let role_name = lookup(item, &self.role).and_then(Value::as_str).unwrap_or("");
                    let role = self
                        .role(role_name)
                        .ok_or_else(|| Error::data(format!("{source}/{id}: unknown role `{role_name}`")))?;
                    let content = lookup(item, &self.content).and_then(as_text).unwrap_or_default();
                    messages.push(Message::new(role, content));
                }
            }
            _ => return Err(Error::config(format!("{source}: field map needs `messages` or `prompt` + `response`"))),
        }
        let language = self
            .language
            .as_deref()
            .and_then(|p| lookup(row, p))
            .and_then(Value::as_str)
            .map_or_else(|| self.default_language.clone(), String::from);
        let quality_score = self.quality_score.as_deref().and_then(|p| lookup(row, p)).and_then(Value::as_f64);
        let token_count = self.tokens.as_deref().and_then(|p| lookup(row, p)).and_then(Value::as_u64).unwrap_or(0);
        let e = SftEntry { id, source: source.to_string(), messages, language, quality_score, token_count };
        e.validate()?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn prompt_response_rows() {
        let map = FieldMap {
            id: "uid".into(),
            prompt: Some("q.text".into()),
            response: Some("a".into()),
            ..Default::default()
        };
        let e = map.adapt(&json!({"uid": 7, "q": {"text": "Olá?"}, "a": "Olá!"}), "src").unwrap();
        assert_eq!(e.id, "7");
        assert_eq!(e.messages.len(), 2);
        assert_eq!(e.language, "por");
    }

    #[test]
    fn message_rows_with_role_names() {
        let map = FieldMap { messages: Some("conversations".into()), role: "from".into(), content: "value".into(), ..Default::default() };
        let row = json!({"id": "x", "conversations": [{"from": "human", "value": "a"}, {"from": "gpt", "value": "b"}], "quality_score": 5.5});
        let e = map.adapt(&row, "s").unwrap();
        assert_eq!(e.messages[1].role, Role::Assistant);
        assert_eq!(e.quality_score, Some(5.5));
        assert!(map.adapt(&json!({"id": "y", "conversations": [{"from": "robot", "value": "a"}]}), "s").is_err());
    }
}
