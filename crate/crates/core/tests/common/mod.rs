//! Shared helpers for the integration tests: oracle-driven filter decisions
//! and small filesystem utilities.
#![allow(dead_code)]

use std::path::Path;

use corpus_forge::filters::{FineWebQualityConfig, GopherQualityConfig, GopherRepetitionConfig};
use corpus_forge_fixtures::oracle;

/// First repetition threshold the oracle statistics exceed, as a reason code.
pub fn repetition_decision(s: &oracle::Repetition, c: &GopherRepetitionConfig) -> Option<String> {
    let checks = [
        (s.dup_para_frac, c.dup_paragraph_frac_max, "dup_para_frac".to_string()),
        (s.dup_para_char_frac, c.dup_paragraph_char_frac_max, "dup_para_char_frac".into()),
        (s.dup_line_frac, c.dup_line_frac_max, "dup_line_frac".into()),
        (s.dup_line_char_frac, c.dup_line_char_frac_max, "dup_line_char_frac".into()),
    ];
    let tops = (0..3).map(|i| (s.top_ngram_char_frac[i], c.top_ngram_char_frac_max[i], format!("top_{}gram_char_frac", i + 2)));
    let dups = (0..6).map(|i| (s.dup_ngram_char_frac[i], c.dup_ngram_char_frac_max[i], format!("dup_{}gram_char_frac", i + 5)));
    checks
        .into_iter()
        .chain(tops)
        .chain(dups)
        .find(|(v, max, _)| v > max)
        .map(|(_, _, name)| format!("gopher_rep:{name}"))
}

pub fn quality_decision(s: &oracle::Quality, c: &GopherQualityConfig) -> Option<String> {
    let code = if s.word_count < c.min_words as f64 || s.word_count > c.max_words as f64 {
        "word_count"
    } else if s.mean_word_len < c.mean_word_len_range[0] || s.mean_word_len > c.mean_word_len_range[1] {
        "mean_word_len"
    } else if s.hash_word_ratio > c.symbol_word_ratio_max || s.ellipsis_word_ratio > c.symbol_word_ratio_max {
        "symbol_ratio"
    } else if s.bullet_line_frac > c.bullet_line_frac_max {
        "bullet_lines"
    } else if s.ellipsis_line_frac > c.ellipsis_line_frac_max {
        "ellipsis_lines"
    } else if s.alpha_word_frac < c.alpha_word_frac_min {
        "alpha_words"
    } else if s.stop_word_hits < c.min_stop_word_hits as f64 {
        "stop_words"
    } else {
        return None;
    };
    Some(format!("gopher_quality:{code}"))
}

pub fn fineweb_decision(s: &oracle::FineWeb, c: &FineWebQualityConfig) -> Option<String> {
    let code = if s.line_count == 0.0 {
        "empty"
    } else if s.short_line_frac > c.short_line_frac_max {
        "short_line_frac"
    } else if s.line_punct_frac < c.line_punct_frac_min {
        "line_punct_frac"
    } else if s.char_dup_frac > c.char_dup_frac_max {
        "char_dup_frac"
    } else if s.new_line_ratio > c.new_line_ratio_max {
        "newline_ratio"
    } else {
        return None;
    };
    Some(format!("fineweb:{code}"))
}

/// `a` and `b` agree to `tol`, treating equal infinities as equal.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

/// Every regular file under `dir`, relative path to contents, sorted.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
