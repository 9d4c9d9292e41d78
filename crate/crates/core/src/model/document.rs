use chrono::NaiveDate;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One text record flowing through the pipeline.
///
/// Serialized as one JSON object per line with the keys `id, url, date,
/// text, lang, lang_conf, annotations`. Absent optional fields are omitted,
/// never written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(rename = "url", default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(rename = "date", default, skip_serializing_if = "Option::is_none")]
    pub capture_date: Option<NaiveDate>,
    pub text: String,
    #[serde(rename = "lang", default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
    #[serde(rename = "lang_conf", default, skip_serializing_if = "Option::is_none")]
    language_confidence: Option<f64>,
    /// stage name -> note, in the order stages wrote them
    #[serde(default)]
    pub annotations: IndexMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source_url: None,
            capture_date: None,
            text: text.into(),
            language: None,
            language_confidence: None,
            annotations: IndexMap::new(),
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.source_url = Some(url.into());
        self
    }

    pub fn with_date(mut self, date: NaiveDate) -> Self {
        self.capture_date = Some(date);
        self
    }

    pub fn language(&self) -> Option<(&str, f64)> {
        match (&self.language, self.language_confidence) {
            (Some(l), Some(c)) => Some((l.as_str(), c)),
            _ => None,
        }
    }

    /// Sets language and confidence together; the two are always present or
    /// absent as a pair.
    pub fn set_language(&mut self, code: impl Into<String>, confidence: f64) {
        self.language = Some(code.into());
        self.language_confidence = Some(confidence.clamp(0.0, 1.0));
    }

    pub fn clear_language(&mut self) {
        self.language = None;
        self.language_confidence = None;
    }

    pub fn annotate(&mut self, stage: &str, note: impl Into<String>) {
        self.annotations.insert(stage.to_string(), note.into());
    }

    /// Checks the record-level invariants that deserialization alone cannot.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::data("document id is empty"));
        }
        match (&self.language, self.language_confidence) {
            (Some(_), Some(c)) if !(0.0..=1.0).contains(&c) => Err(Error::data(format!(
                "document {}: lang_conf {c} outside [0,1]",
                self.id
            ))),
            (Some(_), None) | (None, Some(_)) => Err(Error::data(format!(
                "document {}: lang and lang_conf must appear together",
                self.id
            ))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_fields_are_omitted() {
        let doc = Document::new("d1", "olá");
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(json, r#"{"id":"d1","text":"olá","annotations":{}}"#);
        assert!(!json.contains("null"));
    }

    #[test]
    fn full_record_field_names() {
        let mut doc = Document::new("d2", "texto")
            .with_url("https://arquivo.pt/x")
            .with_date(NaiveDate::from_ymd_opt(2020, 5, 17).unwrap());
        doc.set_language("por", 0.93);
        doc.annotate("ingest", "text/html");
        let json = serde_json::to_string(&doc).unwrap();
        let pos: Vec<_> = ["id", "url", "date", "text", "lang", "lang_conf", "annotations"]
            .iter()
            .map(|k| json.find(&format!("\"{k}\":")).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["date"], "2020-05-17");
        let back: Document = serde_json::from_value(v).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn language_pairing_enforced_on_validate() {
        let doc: Document = serde_json::from_str(r#"{"id":"a","text":"x","lang":"por"}"#).unwrap();
        assert!(doc.validate().is_err());
        let doc: Document =
            serde_json::from_str(r#"{"id":"a","text":"x","lang":"por","lang_conf":0.7}"#).unwrap();
        assert!(doc.validate().is_ok());
        assert_eq!(doc.language(), Some(("por", 0.7)));
    }
}
