//! Gopher repetition and quality heuristics.
//!
//! All statistics are computed on the NFC form of the text. Character
//! counts are Unicode scalar values; words are maximal non-whitespace runs.
//! Each check drops when its statistic is strictly beyond the threshold, and
//! checks run in a fixed order so the first failure names the reason.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Reason, Verdict};
use crate::text::{bare_lower, char_len, nfc};

pub const REPETITION_STAGE: &str = "gopher_repetition";
pub const QUALITY_STAGE: &str = "gopher_quality";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GopherRepetitionConfig {
    pub dup_line_frac_max: f64,
    pub dup_paragraph_frac_max: f64,
    pub dup_line_char_frac_max: f64,
    pub dup_paragraph_char_frac_max: f64,
    /// thresholds for n = 2, 3, 4
    pub top_ngram_char_frac_max: [f64; 3],
    /// thresholds for n = 5, 6, 7, 8, 9, 10
    pub dup_ngram_char_frac_max: [f64; 6],
}

impl Default for GopherRepetitionConfig {
    fn default() -> Self {
        GopherRepetitionConfig {
            dup_line_frac_max: 0.30,
            dup_paragraph_frac_max: 0.30,
            dup_line_char_frac_max: 0.20,
            dup_paragraph_char_frac_max: 0.20,
            top_ngram_char_frac_max: [0.20, 0.18, 0.16],
            dup_ngram_char_frac_max: [0.15, 0.14, 0.13, 0.12, 0.11, 0.10],
        }
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl GopherRepetitionConfig {
    pub fn validate(&self) -> Result<()> {
        check_fraction("dup_line_frac_max", self.dup_line_frac_max)?;
        check_fraction("dup_paragraph_frac_max", self.dup_paragraph_frac_max)?;
        check_fraction("dup_line_char_frac_max", self.dup_line_char_frac_max)?;
        check_fraction("dup_paragraph_char_frac_max", self.dup_paragraph_char_frac_max)?;
        for v in self.top_ngram_char_frac_max.iter().chain(&self.dup_ngram_char_frac_max) {
            check_fraction("n-gram threshold", *v)?;
        }
        Ok(())
    }

    /// First statistic beyond its threshold, in check order.
    pub fn first_violation(&self, s: &RepetitionStats) -> Option<Reason> {
        if s.dup_para_frac > self.dup_paragraph_frac_max {
            return Some(Reason::GopherRepDupParaFrac);
        }
        if s.dup_para_char_frac > self.dup_paragraph_char_frac_max {
            return Some(Reason::GopherRepDupParaCharFrac);
        }
        if s.dup_line_frac > self.dup_line_frac_max {
            return Some(Reason::GopherRepDupLineFrac);
        }
        if s.dup_line_char_frac > self.dup_line_char_frac_max {
            return Some(Reason::GopherRepDupLineCharFrac);
        }
        for (i, (v, max)) in s.top_ngram_char_frac.iter().zip(&self.top_ngram_char_frac_max).enumerate() {
            if v > max {
                return Some(Reason::GopherRepTopNgram(i as u8 + 2));
            }
        }
        for (i, (v, max)) in s.dup_ngram_char_frac.iter().zip(&self.dup_ngram_char_frac_max).enumerate() {
            if v > max {
                return Some(Reason::GopherRepDupNgram(i as u8 + 5));
            }
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepetitionStats {
    pub dup_para_frac: f64,
    pub dup_para_char_frac: f64,
    pub dup_line_frac: f64,
    pub dup_line_char_frac: f64,
    /// n = 2, 3, 4
    pub top_ngram_char_frac: [f64; 3],
    /// n = 5..=10
    pub dup_ngram_char_frac: [f64; 6],
}

impl RepetitionStats {
    /// `(name, value)` pairs, named the same way the reason codes are.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("dup_para_frac".to_string(), self.dup_para_frac),
            ("dup_para_char_frac".to_string(), self.dup_para_char_frac),
            ("dup_line_frac".to_string(), self.dup_line_frac),
            ("dup_line_char_frac".to_string(), self.dup_line_char_frac),
        ];
        for (i, x) in self.top_ngram_char_frac.iter().enumerate() {
            v.push((format!("top_{}gram_char_frac", i + 2), *x));
        }
        for (i, x) in self.dup_ngram_char_frac.iter().enumerate() {
            v.push((format!("dup_{}gram_char_frac", i + 5), *x));
        }
        v
    }
}

/// Count and character mass of elements repeating an earlier element.
fn duplicates(items: &[&str]) -> (usize, usize) {
    let mut seen = HashSet::with_capacity(items.len());
    let mut count = 0;
    let mut chars = 0;
    for item in items {
        if !seen.insert(*item) {
            count += 1;
            chars += char_len(item);
        }
    }
    (count, chars)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn split_nonempty<'a>(text: &'a str, min_newlines: usize) -> Vec<&'a str> {
    let text = text.trim();
    if text.is_empty() {
        return Vec::new();
    }
    // split on runs of at least `min_newlines` consecutive '\n'
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            let run_start = i;
            while i < bytes.len() && bytes[i] == b'\n' {
                i += 1;
            }
            if i - run_start >= min_newlines {
                out.push(&text[start..run_start]);
                start = i;
            }
        } else {
            i += 1;
        }
    }
    out.push(&text[start..]);
    out
}

/// Character mass of the most frequent n-gram times its count. Ties go to
/// the longer n-gram, then the lexicographically smaller one.
fn top_ngram_chars(words: &[&str], n: usize) -> usize {
    if words.len() < n {
        return 0;
    }
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    for w in words.windows(n) {
        *counts.entry(w).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(gram, c)| {
            // n-gram text is the words joined by single spaces
            let len = gram.iter().map(|w| char_len(w)).sum::<usize>() + n - 1;
            (c, len, gram)
        })
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(b.2.cmp(a.2)))
        // an n-gram seen once is not repetition, however long it is
        .filter(|(c, _, _)| *c > 1)
        .map(|(c, len, _)| c * len)
        .unwrap_or(0)
}

/// Characters (word characters only, separators excluded) covered by
/// n-grams that repeat an earlier n-gram. After a repeat the window jumps
/// past it, so overlapping repeats are not double counted.
fn duplicated_ngram_chars(words: &[&str], n: usize) -> usize {
    if words.len() < n {
        return 0;
    }
    let mut seen: HashSet<&[&str]> = HashSet::new();
    let mut chars = 0;
    let mut i = 0;
    while i + n <= words.len() {
        let gram = &words[i..i + n];
        if seen.contains(gram) {
            chars += gram.iter().map(|w| char_len(w)).sum::<usize>();
            i += n;
        } else {
            seen.insert(gram);
            i += 1;
        }
    }
    chars
}

pub fn repetition_stats(text: &str) -> RepetitionStats {
    let text = nfc(text);
    let total = char_len(&text);
    let paragraphs = split_nonempty(&text, 2);
    let lines = split_nonempty(&text, 1);
    let (para_dups, para_chars) = duplicates(&paragraphs);
    let (line_dups, line_chars) = duplicates(&lines);
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut top = [0.0; 3];
    for (i, n) in (2..=4).enumerate() {
        top[i] = ratio(top_ngram_chars(&words, n), total);
    }
    let mut dup = [0.0; 6];
    for (i, n) in (5..=10).enumerate() {
        dup[i] = ratio(duplicated_ngram_chars(&words, n), total);
    }
    RepetitionStats {
        dup_para_frac: ratio(para_dups, paragraphs.len()),
        dup_para_char_frac: ratio(para_chars, total),
        dup_line_frac: ratio(line_dups, lines.len()),
        dup_line_char_frac: ratio(line_chars, total),
        top_ngram_char_frac: top,
        dup_ngram_char_frac: dup,
    }
}

pub fn gopher_repetition(doc: &Document, cfg: &GopherRepetitionConfig) -> Verdict {
    match cfg.first_violation(&repetition_stats(&doc.text)) {
        Some(r) => Verdict::drop(REPETITION_STAGE, r),
        None => Verdict::keep(REPETITION_STAGE),
    }
}

fn default_stop_words() -> Vec<String> {
    ["de", "a", "e", "que", "o", "da", "do", "em", "para", "com", "não", "uma"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GopherQualityConfig {
    pub min_words: usize,
    pub max_words: usize,
    pub mean_word_len_range: [f64; 2],
    /// applies separately to `#` and to ellipses (`...`, `…`) per word
    pub symbol_word_ratio_max: f64,
    pub bullet_line_frac_max: f64,
    pub ellipsis_line_frac_max: f64,
    pub alpha_word_frac_min: f64,
    pub min_stop_word_hits: usize,
    pub stop_words: Vec<String>,
}

impl Default for GopherQualityConfig {
    fn default() -> Self {
        GopherQualityConfig {
            min_words: 50,
            max_words: 100_000,
            mean_word_len_range: [3.0, 10.0],
            symbol_word_ratio_max: 0.10,
            bullet_line_frac_max: 0.90,
            ellipsis_line_frac_max: 0.30,
            alpha_word_frac_min: 0.80,
            min_stop_word_hits: 2,
            stop_words: default_stop_words(),
        }
    }
}

impl GopherQualityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words > self.max_words {
            return Err(Error::config(format!(
                "gopher_quality.min_words ({}) > max_words ({})",
                self.min_words, self.max_words
            )));
        }
        let [lo, hi] = self.mean_word_len_range;
        if lo > hi || lo < 0.0 {
            return Err(Error::config(format!("gopher_quality.mean_word_len_range [{lo}, {hi}] is invalid")));
        }
        check_fraction("symbol_word_ratio_max", self.symbol_word_ratio_max)?;
        check_fraction("bullet_line_frac_max", self.bullet_line_frac_max)?;
        check_fraction("ellipsis_line_frac_max", self.ellipsis_line_frac_max)?;
        check_fraction("alpha_word_frac_min", self.alpha_word_frac_min)?;
        Ok(())
    }

    pub fn first_violation(&self, s: &QualityStats) -> Option<Reason> {
        if s.word_count < self.min_words as f64 || s.word_count > self.max_words as f64 {
            return Some(Reason::GopherQualityWordCount);
        }
        let [lo, hi] = self.mean_word_len_range;
        if s.mean_word_len < lo || s.mean_word_len > hi {
            return Some(Reason::GopherQualityMeanWordLen);
        }
        if s.hash_word_ratio > self.symbol_word_ratio_max
            || s.ellipsis_word_ratio > self.symbol_word_ratio_max
        {
            return Some(Reason::GopherQualitySymbolRatio);
        }
        if s.bullet_line_frac > self.bullet_line_frac_max {
            return Some(Reason::GopherQualityBulletLines);
        }
        if s.ellipsis_line_frac > self.ellipsis_line_frac_max {
            return Some(Reason::GopherQualityEllipsisLines);
        }
        if s.alpha_word_frac < self.alpha_word_frac_min {
            return Some(Reason::GopherQualityAlphaWords);
        }
        if s.stop_word_hits < self.min_stop_word_hits as f64 {
            return Some(Reason::GopherQualityStopWords);
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    pub word_count: f64,
    pub mean_word_len: f64,
    pub hash_word_ratio: f64,
    pub ellipsis_word_ratio: f64,
    pub bullet_line_frac: f64,
    pub ellipsis_line_frac: f64,
    pub alpha_word_frac: f64,
    pub stop_word_hits: f64,
}

impl QualityStats {
    pub fn named(&self) -> Vec<(String, f64)> {
        [
            ("word_count", self.word_count),
            ("mean_word_len", self.mean_word_len),
            ("hash_word_ratio", self.hash_word_ratio),
            ("ellipsis_word_ratio", self.ellipsis_word_ratio),
            ("bullet_line_frac", self.bullet_line_frac),
            ("ellipsis_line_frac", self.ellipsis_line_frac),
            ("alpha_word_frac", self.alpha_word_frac),
            ("stop_word_hits", self.stop_word_hits),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Line prefixes counted as list bullets.
pub const BULLETS: &[char] = &['•', '‣', '◦', '·', '-', '*'];

pub fn quality_stats(text: &str, stop_words: &[String]) -> QualityStats {
    let text = nfc(text);
    let words: Vec<&str> = text.split_whitespace().collect();
    let n = words.len();
    let total_word_chars: usize = words.iter().map(|w| char_len(w)).sum();
    let hashes = text.matches('#').count();
    let ellipses = text.matches("...").count() + text.matches('…').count();
    let lines: Vec<&str> = text.split('\n').map(str::trim).filter(|l| !l.is_empty()).collect();
    let bullets = lines.iter().filter(|l| l.starts_with(BULLETS)).count();
    let ellipsis_lines = lines
        .iter()
        .filter(|l| l.ends_with("...") || l.ends_with('…'))
        .count();
    let alpha = words.iter().filter(|w| w.chars().any(char::is_alphabetic)).count();
    let stops: HashSet<String> = stop_words.iter().map(|s| s.to_lowercase()).collect();
    let stop_hits = words.iter().filter(|w| stops.contains(&bare_lower(w))).count();
    QualityStats {
        word_count: n as f64,
        mean_word_len: ratio(total_word_chars, n),
        hash_word_ratio: ratio(hashes, n),
        ellipsis_word_ratio: ratio(ellipses, n),
        bullet_line_frac: ratio(bullets, lines.len()),
        ellipsis_line_frac: ratio(ellipsis_lines, lines.len()),
        alpha_word_frac: ratio(alpha, n),
        stop_word_hits: stop_hits as f64,
    }
}

pub fn gopher_quality(doc: &Document, cfg: &GopherQualityConfig) -> Verdict {
    match cfg.first_violation(&quality_stats(&doc.text, &cfg.stop_words)) {
        Some(r) => Verdict::drop(QUALITY_STAGE, r),
        None => Verdict::keep(QUALITY_STAGE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(t: &str) -> Document {
        Document::new("t", t)
    }

    #[test]
    fn repeated_line_ten_times() {
        // hand count: 10 lines, 9 repeat the first
        let text = vec!["esta linha repete-se sem parar"; 10].join("\n");
        let s = repetition_stats(&text);
        assert!((s.dup_line_frac - 0.9).abs() < 1e-12);
        let v = gopher_repetition(&doc(&text), &GopherRepetitionConfig::default());
        assert_eq!(v.reason(), Some(Reason::GopherRepDupLineFrac));
    }

    #[test]
    fn unique_text_keeps() {
        let text = "primeira linha com palavras diferentes\nsegunda frase tem outro conteúdo\nterceiro caso ainda mais variado aqui";
        let s = repetition_stats(text);
        assert_eq!(s.dup_line_frac, 0.0);
        assert!(s.dup_ngram_char_frac.iter().all(|&x| x == 0.0));
        // every n-gram occurs once, so none counts as a top repeat
        assert_eq!(s.top_ngram_char_frac, [0.0; 3]);
        assert!(gopher_repetition(&doc(text), &GopherRepetitionConfig::default()).is_keep());
    }

    #[test]
    fn top_bigram_fraction() {
        // "um dois" and "dois um" both occur 3 times; 3 * 7 chars / 26 chars
        let s = repetition_stats("um dois um dois um dois um");
        assert!((s.top_ngram_char_frac[0] - 21.0 / 26.0).abs() < 1e-12);
        let v = gopher_repetition(&doc("um dois um dois um dois um"), &GopherRepetitionConfig::default());
        assert_eq!(v.reason_code(), "gopher_rep:top_2gram_char_frac");
    }

    #[test]
    fn duplicated_ngram_jumps_past_repeats() {
        // words: a b c d e a b c d e a b c d e (15), 5-gram "a b c d e"
        // repeats at 5 and 10: 2 * 5 word chars = 10 of 29 chars
        let t = "a b c d e a b c d e a b c d e";
        let s = repetition_stats(t);
        assert!((s.dup_ngram_char_frac[0] - 10.0 / 29.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_keeps_repetition() {
        assert!(gopher_repetition(&doc(""), &GopherRepetitionConfig::default()).is_keep());
    }

    #[test]
    fn short_snippet_fails_word_count() {
        let text = "uma frase curta de apenas doze palavras para testar o limite mínimo";
        assert_eq!(text.split_whitespace().count(), 12);
        let v = gopher_quality(&doc(text), &GopherQualityConfig::default());
        assert_eq!(v.reason(), Some(Reason::GopherQualityWordCount));
    }

    #[test]
    fn hashes_fail_symbol_ratio() {
        // with the word-count floor lowered to the snippet's 3 words, the
        // first failing check is 12 hashes / 3 words = 4.0 > 0.10
        let cfg = GopherQualityConfig {
            min_words: 3,
            ..Default::default()
        };
        let s = quality_stats("#### #### ####", &cfg.stop_words);
        assert_eq!(s.hash_word_ratio, 4.0);
        let v = gopher_quality(&doc("#### #### ####"), &cfg);
        assert_eq!(v.reason(), Some(Reason::GopherQualitySymbolRatio));
    }

    #[test]
    fn stop_words_match_through_punctuation() {
        let s = quality_stats("Não, disse ele: «Que dia!»", &default_stop_words());
        // não, que
        assert_eq!(s.stop_word_hits, 2.0);
    }

    #[test]
    fn bullets_and_ellipses() {
        let text = "- um item\n- outro item\n• terceiro\ntexto normal...\n\n";
        let s = quality_stats(text, &[]);
        assert!((s.bullet_line_frac - 0.75).abs() < 1e-12);
        assert!((s.ellipsis_line_frac - 0.25).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_inverted_bounds() {
        let cfg = GopherQualityConfig {
            min_words: 10,
            max_words: 5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = GopherRepetitionConfig {
            dup_line_frac_max: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn relaxing_repetition_never_drops(words in proptest::collection::vec("[ab]{1,2}", 0..40), bump in 0.0f64..1.0) {
            let text = words.join(" ");
            let strict = GopherRepetitionConfig::default();
            let stats = repetition_stats(&text);
            let relaxed = GopherRepetitionConfig {
                dup_line_frac_max: (strict.dup_line_frac_max + bump).min(1.0),
                dup_line_char_frac_max: (strict.dup_line_char_frac_max + bump).min(1.0),
                top_ngram_char_frac_max: strict.top_ngram_char_frac_max.map(|x| (x + bump).min(1.0)),
                dup_ngram_char_frac_max: strict.dup_ngram_char_frac_max.map(|x| (x + bump).min(1.0)),
                ..strict.clone()
            };
            if strict.first_violation(&stats).is_none() {
                prop_assert!(relaxed.first_violation(&stats).is_none());
            }
        }
    }
}
