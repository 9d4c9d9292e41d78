//! Character n-gram language identification.
//!
//! Profiles hold add-k smoothed log probabilities for character 1-, 2- and
//! 3-grams. Scoring sums the log probability of every n-gram of the input
//! and divides by the number of words, so the score is a per-word
//! log-likelihood that does not grow with text length. Per-word rather than
//! per-character normalisation keeps the softmax confidence between close
//! languages (Portuguese and Spanish) from collapsing towards uniform.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Reason, Verdict};
use crate::text::nfc;

pub const STAGE: &str = "language";

/// Texts with fewer characters than this are flagged too short to judge.
pub const MIN_CHARS: usize = 20;

pub const ORDERS: [usize; 3] = [1, 2, 3];

const BUILTIN: &[(&str, &str)] = &[
    ("por", include_str!("../../data/lang/por.txt")),
    ("eng", include_str!("../../data/lang/eng.txt")),
    ("spa", include_str!("../../data/lang/spa.txt")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangProfile {
    /// ISO 639-3 code.
    pub language: String,
    pub smoothing: f64,
    /// Log probability of every n-gram seen in training.
    pub ngram_log_probs: BTreeMap<String, f64>,
    /// Log probability assigned to an unseen n-gram, per order 1..=3.
    pub unseen_log_probs: [f64; 3],
}

impl LangProfile {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_log_probs.is_empty() {
            return Err(Error::config(format!("language profile `{}` is empty", self.language)));
        }
        if !(self.smoothing > 0.0) {
            return Err(Error::config(format!(
                "language profile `{}` smoothing must be positive",
                self.language
            )));
        }
        Ok(())
    }

    fn log_prob(&self, gram: &str, order: usize) -> f64 {
        self.ngram_log_probs
            .get(gram)
            .copied()
            .unwrap_or(self.unseen_log_probs[order - 1])
    }

    /// Per-word log-likelihood of `text`.
    pub fn score(&self, text: &str) -> f64 {
        let chars = normalize(text);
        if chars.len() <= 2 {
            return self.unseen_log_probs.iter().sum();
        }
        let mut total = 0.0;
        for_each_ngram(&chars, |order, gram| total += self.log_prob(gram, order));
        // normalised text is " w1 w2 ... wn ": one more space than words
        let words = chars.iter().filter(|&&c| c == ' ').count() - 1;
        total / words as f64
    }
}

/// Lowercased, NFC, letters kept, every other run collapsed to one space,
/// padded with a space on both ends.
fn normalize(text: &str) -> Vec<char> {
    let mut out = vec![' '];
    for c in nfc(text).chars().flat_map(char::to_lowercase) {
        if c.is_alphabetic() {
            out.push(c);
        } else if out.last() != Some(&' ') {
            out.push(' ');
        }
    }
    if out.last() != Some(&' ') {
        out.push(' ');
    }
    out
}

/// Calls `f(order, gram)` for every n-gram ending at each position; the
/// padding spaces make word boundaries visible.
fn for_each_ngram(chars: &[char], mut f: impl FnMut(usize, &str)) {
    let mut buf = String::new();
    for end in 1..chars.len() - 1 {
        for order in ORDERS {
            if order > end + 1 {
                continue;
            }
            buf.clear();
            buf.extend(&chars[end + 1 - order..=end]);
            f(order, &buf);
        }
    }
}

/// Raw n-gram counts for one language, per order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramCounts {
    pub counts: [BTreeMap<String, u64>; 3],
}

impl NgramCounts {
    pub fn add(&mut self, text: &str) {
        let chars = normalize(text);
        if chars.len() <= 2 {
            return;
        }
        for_each_ngram(&chars, |order, gram| {
            *self.counts[order - 1].entry(gram.to_string()).or_insert(0) += 1;
        });
    }

    pub fn total(&self, order: usize) -> u64 {
        self.counts[order - 1].values().sum()
    }

    /// Add-k smoothing with one extra bucket per order for unseen n-grams:
    /// `p(g) = (c(g) + k) / (N + k (V + 1))`, so seen mass plus one unseen
    /// share is exactly 1.
    pub fn into_profile(self, language: &str, k: f64) -> LangProfile {
        let mut ngram_log_probs = BTreeMap::new();
        let mut unseen_log_probs = [0.0; 3];
        for order in ORDERS {
            let counts = &self.counts[order - 1];
            let denom = counts.values().sum::<u64>() as f64 + k * (counts.len() as f64 + 1.0);
            for (g, &c) in counts {
                ngram_log_probs.insert(g.clone(), ((c as f64 + k) / denom).ln());
            }
            unseen_log_probs[order - 1] = (k / denom).ln();
        }
        LangProfile { language: language.to_string(), smoothing: k, ngram_log_probs, unseen_log_probs }
    }
}

pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Trains one profile per language found in `corpus`, sorted by language
/// code.
pub fn train_lang_profile<'a, I>(corpus: I, smoothing: f64) -> Result<Vec<LangProfile>>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    if !(smoothing > 0.0) {
        return Err(Error::config("language smoothing must be positive"));
    }
    let mut by_lang: BTreeMap<String, NgramCounts> = BTreeMap::new();
    for (text, lang) in corpus {
        if lang.trim().is_empty() {
            return Err(Error::config("training document without a language code"));
        }
        by_lang.entry(lang.to_string()).or_default().add(text);
    }
    if by_lang.is_empty() {
        return Err(Error::config("language training corpus is empty"));
    }
    by_lang
        .into_iter()
        .map(|(lang, counts)| {
            let p = counts.into_profile(&lang, smoothing);
            p.validate().map(|_| p)
        })
        .collect()
}

/// Profiles trained on the corpora shipped with the crate (Portuguese,
/// English, Spanish).
pub fn builtin_profiles() -> Vec<LangProfile> {
    let corpus = builtin_corpus();
    train_lang_profile(corpus.iter().map(|(t, l)| (*t, *l)), DEFAULT_SMOOTHING)
        .expect("built-in corpora are non-empty")
}

/// `(sentence, language)` pairs of the shipped training corpora.
pub fn builtin_corpus() -> Vec<(&'static str, &'static str)> {
    BUILTIN
        .iter()
        .flat_map(|(lang, body)| {
            body.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(move |l| (l, *lang))
        })
        .collect()
}

pub fn save_profiles(path: &Path, profiles: &[LangProfile]) -> Result<()> {
    crate::io::write_json_file(path, &profiles)
}

pub fn load_profiles(path: &Path) -> Result<Vec<LangProfile>> {
    let profiles: Vec<LangProfile> = crate::io::read_json_file(path)?;
    if profiles.is_empty() {
        return Err(Error::config(format!("{}: no language profiles", path.display())));
    }
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangGuess {
    pub language: String,
    /// Softmax share of the winner over all profiles.
    pub confidence: f64,
    /// Set when the text is too short for a meaningful answer.
    pub too_short: bool,
}

/// Argmax of per-word log-likelihood; ties go to the profile listed
/// first. Short texts still get an answer but carry `too_short`.
pub fn identify_language(text: &str, profiles: &[LangProfile]) -> Result<LangGuess> {
    if profiles.is_empty() {
        return Err(Error::contract("identify_language needs at least one profile"));
    }
    let scores: Vec<f64> = profiles.iter().map(|p| p.score(text)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let top = scores[best];
    let denom: f64 = scores.iter().map(|s| (s - top).exp()).sum();
    Ok(LangGuess {
        language: profiles[best].language.clone(),
        confidence: 1.0 / denom,
        too_short: text.trim().chars().count() < MIN_CHARS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanguageFilterConfig {
    pub target: String,
    pub min_confidence: f64,
    /// JSON profile store; the built-in profiles are used when unset.
    pub profiles: Option<std::path::PathBuf>,
}

impl Default for LanguageFilterConfig {
    fn default() -> Self {
        LanguageFilterConfig { target: "por".into(), min_confidence: 0.65, profiles: None }
    }
}

impl LanguageFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::config(format!(
                "language.min_confidence = {} is outside [0, 1]",
                self.min_confidence
            )));
        }
        if self.target.is_empty() {
            return Err(Error::config("language.target is empty"));
        }
        Ok(())
    }

    pub fn load_profiles(&self) -> Result<Vec<LangProfile>> {
        let profiles = match &self.profiles {
            Some(p) => load_profiles(p)?,
            None => builtin_profiles(),
        };
        if !profiles.iter().any(|p| p.language == self.target) {
            return Err(Error::config(format!("no profile for target language `{}`", self.target)));
        }
        Ok(profiles)
    }
}

/// Identifies `doc`'s language, records it on the document and decides.
pub fn language_filter(doc: &mut Document, profiles: &[LangProfile], cfg: &LanguageFilterConfig) -> Result<Verdict> {
    let guess = identify_language(&doc.text, profiles)?;
    doc.set_language(guess.language.clone(), guess.confidence);
    Ok(if guess.too_short {
        Verdict::drop(STAGE, Reason::LangTooShort)
    } else if guess.language != cfg.target {
        Verdict::drop(STAGE, Reason::LangNotTarget)
    } else if guess.confidence < cfg.min_confidence {
        Verdict::drop(STAGE, Reason::LangLowConfidence)
    } else {
        Verdict::keep(STAGE)
    })
}

/// Held-out accuracy helper: trains on every line whose index is not
/// `≡ fold (mod folds)` and classifies the rest.
pub fn holdout_accuracy(corpus: &[(&str, &str)], folds: usize, fold: usize) -> Result<(usize, usize)> {
    let (train, test): (Vec<_>, Vec<_>) =
        corpus.iter().enumerate().partition(|(i, _)| i % folds != fold);
    let profiles = train_lang_profile(train.iter().map(|(_, (t, l))| (*t, *l)), DEFAULT_SMOOTHING)?;
    let mut hits = 0;
    for (_, (t, l)) in &test {
        if identify_language(t, &profiles)?.language == *l {
            hits += 1;
        }
    }
    Ok((hits, test.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothed_mass_is_one() {
        let profiles = train_lang_profile([("abc abd", "xxx")], 0.5).unwrap();
        let p = &profiles[0];
        let mut counts = NgramCounts::default();
        counts.add("abc abd");
        for order in ORDERS {
            let total = counts.total(order) as f64;
            let raw: f64 = counts.counts[order - 1].values().map(|&c| c as f64 / total).sum();
            assert!((raw - 1.0).abs() < 1e-9);
            let seen: f64 = counts.counts[order - 1].keys().map(|g| p.ngram_log_probs[g].exp()).sum();
            assert!(seen < 1.0);
            assert!((seen + p.unseen_log_probs[order - 1].exp() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_and_errors() {
        let c = builtin_corpus();
        let a = train_lang_profile(c.iter().copied(), 0.5).unwrap();
        let b = train_lang_profile(c.iter().copied(), 0.5).unwrap();
        assert_eq!(a, b);
        assert!(matches!(train_lang_profile([], 0.5), Err(Error::Config(_))));
        assert!(matches!(identify_language("x", &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn classifies_examples() {
        let all = builtin_profiles();
        let pe: Vec<_> = all.iter().filter(|p| p.language != "spa").cloned().collect();
        let g = identify_language("O comboio chegou à estação de Lisboa esta manhã.", &pe).unwrap();
        assert_eq!(g.language, "por");
        assert!(g.confidence > 0.5);
        let g = identify_language("The train arrived at the station this morning.", &pe).unwrap();
        assert_eq!(g.language, "eng");
        assert!(g.confidence > 0.5);
        let one = &all[..1];
        let g = identify_language("qualquer coisa", one).unwrap();
        assert_eq!(g.confidence, 1.0);
        assert!(g.too_short);
    }

    #[test]
    fn held_out_accuracy() {
        let corpus = builtin_corpus();
        let (mut hits, mut n) = (0, 0);
        for fold in 0..5 {
            let (h, t) = holdout_accuracy(&corpus, 5, fold).unwrap();
            hits += h;
            n += t;
        }
        assert!(hits as f64 / n as f64 >= 0.95, "{hits}/{n}");
    }

    #[test]
    fn filter_rule() {
        let profiles = builtin_profiles();
        let cfg = LanguageFilterConfig::default();
        let mut d = Document::new("d", "O comboio chegou à estação de Lisboa esta manhã, com meia hora de atraso.");
        assert!(language_filter(&mut d, &profiles, &cfg).unwrap().is_keep());
        assert_eq!(d.language().unwrap().0, "por");
        let mut e = Document::new("e", "The train arrived at the station this morning, half an hour late.");
        assert_eq!(language_filter(&mut e, &profiles, &cfg).unwrap().reason(), Some(Reason::LangNotTarget));
        let mut s = Document::new("s", "Olá!");
        assert_eq!(language_filter(&mut s, &profiles, &cfg).unwrap().reason(), Some(Reason::LangTooShort));
    }
}
