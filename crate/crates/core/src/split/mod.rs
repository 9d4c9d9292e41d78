//! Quality splits from an external classifier's scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{fineweb_stats, quality_stats, repetition_stats};
use crate::io::JsonlReader;
use crate::model::{Document, Reason, StageStats, Tokenizer};

pub const STAGE: &str = "split";

/// Source name recorded when the built-in heuristic scorer is used.
pub const FALLBACK_SOURCE: &str = "fallback-heuristic (fixture testing only)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualitySplit {
    High,
    Medium,
    Low,
    Unscored,
}

impl QualitySplit {
    pub const ALL: [QualitySplit; 4] = [QualitySplit::High, QualitySplit::Medium, QualitySplit::Low, QualitySplit::Unscored];

    pub fn name(self) -> &'static str {
        match self {
            QualitySplit::High => "high",
            QualitySplit::Medium => "medium",
            QualitySplit::Low => "low",
            QualitySplit::Unscored => "unscored",
        }
    }

    pub fn reason(self) -> Reason {
        match self {
            QualitySplit::High => Reason::SplitHigh,
            QualitySplit::Medium => Reason::SplitMedium,
            QualitySplit::Low => Reason::SplitLow,
            QualitySplit::Unscored => Reason::SplitUnscored,
        }
    }
}

impl fmt::Display for QualitySplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QualitySplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QualitySplit::ALL
            .into_iter()
            .find(|q| q.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::data(format!("unknown quality split `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitThresholds {
    pub high_min: f64,
    pub medium_min: f64,
}

impl Default for SplitThresholds {
    fn default() -> Self {
        SplitThresholds { high_min: 0.75, medium_min: 0.40 }
    }
}

impl SplitThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.medium_min && self.medium_min <= self.high_min && self.high_min <= 1.0) {
            return Err(Error::config(format!(
                "split thresholds need 0 <= medium_min ({}) <= high_min ({}) <= 1",
                self.medium_min, self.high_min
            )));
        }
        Ok(())
    }

    pub fn bucket(&self, score: f64) -> QualitySplit {
        if score >= self.high_min {
            QualitySplit::High
        } else if score >= self.medium_min {
            QualitySplit::Medium
        } else {
            QualitySplit::Low
        }
    }
}

#[derive(Debug, Deserialize)]
struct ScoreLine {
    id: String,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default)]
    label: Option<String>,
}

/// Scores (and optionally class labels) keyed by document id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityScoreTable {
    pub source_name: String,
    scores: HashMap<String, f64>,
    labels: HashMap<String, QualitySplit>,
}

impl QualityScoreTable {
    pub fn new(source_name: impl Into<String>) -> Self {
        QualityScoreTable { source_name: source_name.into(), ..Default::default() }
    }

    pub fn insert(&mut self, id: impl Into<String>, score: f64) -> Result<()> {
        let id = id.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::data(format!("score {score} for `{id}` is outside [0, 1]")));
        }
        if self.scores.insert(id.clone(), score).is_some() {
            return Err(Error::data(format!("duplicate score for `{id}`")));
        }
        Ok(())
    }

    /// A class label overrides thresholding for that document.
    pub fn insert_label(&mut self, id: impl Into<String>, label: QualitySplit) {
        self.labels.insert(id.into(), label);
    }

    pub fn score(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn label(&self, id: &str) -> Option<QualitySplit> {
        self.labels.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len().max(self.labels.len())
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty() && self.labels.is_empty()
    }

    /// JSONL lines `{id, score}`, optionally with `label` (high, medium,
    /// low). Out-of-range scores and duplicate ids are data errors.
    pub fn load(path: &Path, source_name: &str) -> Result<Self> {
        let mut table = QualityScoreTable::new(source_name);
        for line in JsonlReader::<ScoreLine, _>::open(path)? {
            let line = line?;
            if let Some(label) = &line.label {
                table.insert_label(line.id.clone(), label.parse()?);
            }
            match line.score {
                Some(s) => table.insert(line.id, s)?,
                None if line.label.is_some() => {}
                None => return Err(Error::data(format!("{}: `{}` has neither score nor label", path.display(), line.id))),
            }
        }
        Ok(table)
    }
}

pub fn assign_quality(doc_id: &str, table: &QualityScoreTable, t: &SplitThresholds) -> QualitySplit {
    if let Some(label) = table.label(doc_id) {
        return label;
    }
    table.score(doc_id).map_or(QualitySplit::Unscored, |s| t.bucket(s))
}

/// Heuristic quality in [0, 1] from the filter statistics, for tests and
/// fixtures where no classifier scores exist. Not a substitute for the
/// external classifier.
pub fn fallback_score(text: &str, stop_words: &[String]) -> f64 {
    let q = quality_stats(text, stop_words);
    let r = repetition_stats(text);
    let f = fineweb_stats(text, 30);
    if q.word_count == 0.0 {
        return 0.0;
    }
    let stop_density = (q.stop_word_hits / q.word_count * 4.0).min(1.0);
    let length = (q.word_count / 200.0).min(1.0);
    let parts = [
        q.alpha_word_frac,
        stop_density,
        f.line_punct_frac,
        1.0 - r.dup_line_char_frac.min(1.0),
        length,
    ];
    let s = parts.iter().sum::<f64>() / parts.len() as f64;
    s.clamp(0.0, 1.0)
}

pub fn fallback_table<'a, I>(docs: I, stop_words: &[String]) -> QualityScoreTable
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut t = QualityScoreTable::new(FALLBACK_SOURCE);
    for d in docs {
        // ids are unique upstream; a repeat keeps the first score
        let _ = t.insert(d.id.clone(), fallback_score(&d.text, stop_words));
    }
    t
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTotals {
    pub docs: u64,
    pub tokens: u64,
    pub written: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub stats: StageStats,
    pub per_split: BTreeMap<QualitySplit, SplitTotals>,
}

pub fn default_selection() -> BTreeSet<QualitySplit> {
    BTreeSet::from([QualitySplit::High, QualitySplit::Medium])
}

/// Routes every document to exactly one split. `sink` receives the
/// documents of selected splits and, always, the unscored ones (the
/// quarantine stream); unselected scored splits are counted but not passed
/// on. Stage stats count written selected documents as kept and the rest
/// as dropped under `split:<label>`.
pub fn materialize_splits<I>(
    docs: I,
    assign: impl Fn(&Document) -> QualitySplit,
    selected: &BTreeSet<QualitySplit>,
    tokenizer: &Tokenizer,
    mut sink: impl FnMut(QualitySplit, &Document) -> Result<()>,
) -> Result<SplitReport>
where
    I: IntoIterator<Item = Document>,
{
    let mut stats = StageStats::new(STAGE);
    let mut per_split: BTreeMap<QualitySplit, SplitTotals> = QualitySplit::ALL
        .into_iter()
        .map(|q| (q, SplitTotals { written: selected.contains(&q) || q == QualitySplit::Unscored, ..Default::default() }))
        .collect();
    for mut doc in docs {
        let split = assign(&doc);
        let tokens = tokenizer.count(&doc.text);
        let totals = per_split.get_mut(&split).expect("all splits present");
        totals.docs += 1;
        totals.tokens += tokens;
        doc.annotate(STAGE, split.name());
        if split != QualitySplit::Unscored && selected.contains(&split) {
            stats.record_keep(tokens, tokens);
            sink(split, &doc)?;
        } else {
            stats.record_drop(split.reason(), tokens);
            if split == QualitySplit::Unscored {
                sink(split, &doc)?;
            }
        }
    }
    Ok(SplitReport { stats, per_split })
}
