//! FineWeb-style line-shape quality filter.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Reason, Verdict};
use crate::text::{char_len, nfc};

pub const STAGE: &str = "fineweb_quality";

/// Characters that count as ending a line with terminal punctuation.
pub const TERMINAL_PUNCTUATION: &[char] = &['.', '!', '?', '…', '"', '\'', '»', '”', '’'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineWebQualityConfig {
    pub short_line_frac_max: f64,
    /// lines shorter than this many characters are "short"
    pub short_line_chars: usize,
    /// character share of lines that duplicate an earlier line
    pub char_dup_frac_max: f64,
    pub line_punct_frac_min: f64,
    /// newlines per word
    pub new_line_ratio_max: f64,
}

impl Default for FineWebQualityConfig {
    fn default() -> Self {
        FineWebQualityConfig {
            short_line_frac_max: 0.67,
            short_line_chars: 30,
            char_dup_frac_max: 0.01,
            line_punct_frac_min: 0.12,
            new_line_ratio_max: 0.3,
        }
    }
}

impl FineWebQualityConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("short_line_frac_max", self.short_line_frac_max),
            ("char_dup_frac_max", self.char_dup_frac_max),
            ("line_punct_frac_min", self.line_punct_frac_min),
            ("new_line_ratio_max", self.new_line_ratio_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("fineweb.{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn first_violation(&self, s: &FineWebStats) -> Option<Reason> {
        if s.line_count == 0.0 {
            return Some(Reason::FinewebEmpty);
        }
        if s.short_line_frac > self.short_line_frac_max {
            return Some(Reason::FinewebShortLineFrac);
        }
        if s.line_punct_frac < self.line_punct_frac_min {
            return Some(Reason::FinewebLinePunctFrac);
        }
        if s.char_dup_frac > self.char_dup_frac_max {
            return Some(Reason::FinewebCharDupFrac);
        }
        if s.new_line_ratio > self.new_line_ratio_max {
            return Some(Reason::FinewebNewlineRatio);
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FineWebStats {
    /// non-blank lines
    pub line_count: f64,
    pub short_line_frac: f64,
    pub line_punct_frac: f64,
    pub char_dup_frac: f64,
    pub new_line_ratio: f64,
}

impl FineWebStats {
    pub fn named(&self) -> Vec<(String, f64)> {
        [
            ("line_count", self.line_count),
            ("short_line_frac", self.short_line_frac),
            ("line_punct_frac", self.line_punct_frac),
            ("char_dup_frac", self.char_dup_frac),
            ("new_line_ratio", self.new_line_ratio),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub fn fineweb_stats(text: &str, short_line_chars: usize) -> FineWebStats {
    let text = nfc(text);
    let lines: Vec<&str> = text
        .split('\n')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let n = lines.len();
    if n == 0 {
        return FineWebStats::default();
    }
    let short = lines.iter().filter(|l| char_len(l) < short_line_chars).count();
    let punct = lines.iter().filter(|l| l.ends_with(TERMINAL_PUNCTUATION)).count();
    let mut seen = HashSet::new();
    let dup_chars: usize = lines
        .iter()
        .filter(|l| !seen.insert(**l))
        .map(|l| char_len(l))
        .sum();
    let non_newline_chars = text.chars().filter(|&c| c != '\n').count();
    let newlines = text.matches('\n').count();
    let words = text.split_whitespace().count();
    let new_line_ratio = match (newlines, words) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (nl, w) => nl as f64 / w as f64,
    };
    FineWebStats {
        line_count: n as f64,
        short_line_frac: short as f64 / n as f64,
        line_punct_frac: punct as f64 / n as f64,
        char_dup_frac: if non_newline_chars == 0 {
            0.0
        } else {
            dup_chars as f64 / non_newline_chars as f64
        },
        new_line_ratio,
    }
}

pub fn fineweb_quality(doc: &Document, cfg: &FineWebQualityConfig) -> Verdict {
    match cfg.first_violation(&fineweb_stats(&doc.text, cfg.short_line_chars)) {
        Some(r) => Verdict::drop(STAGE, r),
        None => Verdict::keep(STAGE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(t: &str) -> Verdict {
        fineweb_quality(&Document::new("t", t), &FineWebQualityConfig::default())
    }

    #[test]
    fn ten_short_lines() {
        let text = (0..10).map(|i| format!("linha curta {i}.")).collect::<Vec<_>>().join("\n");
        let s = fineweb_stats(&text, 30);
        assert_eq!(s.short_line_frac, 1.0);
        assert_eq!(verdict(&text).reason(), Some(Reason::FinewebShortLineFrac));
    }

    #[test]
    fn well_punctuated_paragraphs() {
        let text = "O comboio das oito chegou atrasado à estação de Santa Apolónia, como quase sempre acontece às segundas-feiras.\n\
                    Os passageiros esperaram pacientemente na plataforma, alguns a ler o jornal e outros a conversar.\n\
                    Quando finalmente partiu, ninguém se queixou, porque a viagem até ao Porto é sempre agradável!";
        // hand computation: 3 lines, none under 30 chars, all end in . or !,
        // no duplicate lines, 2 newlines / 47 words (17 + 15 + 15)
        let s = fineweb_stats(text, 30);
        assert_eq!(s.line_count, 3.0);
        assert_eq!(s.short_line_frac, 0.0);
        assert_eq!(s.line_punct_frac, 1.0);
        assert_eq!(s.char_dup_frac, 0.0);
        let words = text.split_whitespace().count();
        assert_eq!(words, 47);
        assert!((s.new_line_ratio - 2.0 / 47.0).abs() < 1e-12);
        assert!(verdict(text).is_keep());
    }

    #[test]
    fn single_long_line_passes_punctuation() {
        let text = "Uma única linha longa que termina com um ponto final e tem palavras suficientes.";
        let s = fineweb_stats(text, 30);
        assert_eq!(s.line_punct_frac, 1.0);
        assert!(verdict(text).is_keep());
    }

    #[test]
    fn empty_and_list_like() {
        assert_eq!(verdict("  \n \n").reason(), Some(Reason::FinewebEmpty));
        let list = "Este item da lista é bastante comprido.\nOutro item da lista também comprido.\n\n\n\n\n\n\n\n";
        assert_eq!(verdict(list).reason(), Some(Reason::FinewebNewlineRatio));
    }
}
