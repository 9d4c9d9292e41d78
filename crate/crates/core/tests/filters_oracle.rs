mod common;

use common::{close, fineweb_decision, quality_decision, repetition_decision};
use corpus_forge::filters::{
    fineweb_quality, fineweb_stats, gopher_quality, gopher_repetition, quality_stats, repetition_stats,
    FineWebQualityConfig, GopherQualityConfig, GopherRepetitionConfig,
};
use corpus_forge::Document;
use corpus_forge_fixtures::{oracle, text};

fn corpus() -> Vec<String> {
    let mut docs: Vec<String> = text::mixed_documents(120, 11).into_iter().map(|(_, t)| t).collect();
    docs.extend(text::repetition_text(60, 12));
    docs.extend(text::portuguese_paragraphs(20, 13));
    docs.push(text::REPETITION_TEN_LINES.to_string());
    docs.extend(["".to_string(), "  \n\n ".to_string(), "Sa\u{0303}o Tome\u{0301}\n\n\nSão Tomé".to_string()]);
    docs
}

#[test]
fn repetition_stats_match_oracle() {
    let cfg = GopherRepetitionConfig::default();
    for t in corpus() {
        let got = repetition_stats(&t);
        let want = oracle::repetition(&t);
        let pairs = [
            (got.dup_para_frac, want.dup_para_frac),
            (got.dup_para_char_frac, want.dup_para_char_frac),
            (got.dup_line_frac, want.dup_line_frac),
            (got.dup_line_char_frac, want.dup_line_char_frac),
        ];
        for (g, w) in pairs
            .into_iter()
            .chain(got.top_ngram_char_frac.into_iter().zip(want.top_ngram_char_frac))
            .chain(got.dup_ngram_char_frac.into_iter().zip(want.dup_ngram_char_frac))
        {
            assert!(close(g, w, 1e-9), "{g} vs {w} on {t:?}");
        }
        let v = gopher_repetition(&Document::new("d", t.as_str()), &cfg);
        assert_eq!(v.reason().map(|r| r.code().to_string()), repetition_decision(&want, &cfg), "{t:?}");
    }
}

#[test]
fn quality_stats_match_oracle() {
    let cfg = GopherQualityConfig::default();
    let stops: Vec<&str> = cfg.stop_words.iter().map(String::as_str).collect();
    for t in corpus() {
        let got = quality_stats(&t, &cfg.stop_words);
        let want = oracle::quality(&t, &stops);
        for (g, w) in [
            (got.word_count, want.word_count),
            (got.mean_word_len, want.mean_word_len),
            (got.hash_word_ratio, want.hash_word_ratio),
            (got.ellipsis_word_ratio, want.ellipsis_word_ratio),
            (got.bullet_line_frac, want.bullet_line_frac),
            (got.ellipsis_line_frac, want.ellipsis_line_frac),
            (got.alpha_word_frac, want.alpha_word_frac),
            (got.stop_word_hits, want.stop_word_hits),
        ] {
            assert!(close(g, w, 1e-9), "{g} vs {w} on {t:?}");
        }
        let v = gopher_quality(&Document::new("d", t.as_str()), &cfg);
        assert_eq!(v.reason().map(|r| r.code().to_string()), quality_decision(&want, &cfg), "{t:?}");
    }
}

#[test]
fn fineweb_stats_match_oracle() {
    let cfg = FineWebQualityConfig::default();
    for t in corpus() {
        let got = fineweb_stats(&t, cfg.short_line_chars);
        let want = oracle::fineweb(&t, cfg.short_line_chars);
        for (g, w) in [
            (got.line_count, want.line_count),
            (got.short_line_frac, want.short_line_frac),
            (got.line_punct_frac, want.line_punct_frac),
            (got.char_dup_frac, want.char_dup_frac),
            (got.new_line_ratio, want.new_line_ratio),
        ] {
            assert!(close(g, w, 1e-9), "{g} vs {w} on {t:?}");
        }
        let v = fineweb_quality(&Document::new("d", t.as_str()), &cfg);
        assert_eq!(v.reason().map(|r| r.code().to_string()), fineweb_decision(&want, &cfg), "{t:?}");
    }
}

#[test]
fn corpus_exercises_keeps_and_drops() {
    let cfg = GopherQualityConfig::default();
    let verdicts: Vec<bool> = corpus().iter().map(|t| gopher_quality(&Document::new("d", t.as_str()), &cfg).is_keep()).collect();
    assert!(verdicts.iter().any(|k| *k));
    assert!(verdicts.iter().any(|k| !*k));
}

#[test]
fn ten_line_fixture_hand_count() {
    let s = repetition_stats(text::REPETITION_TEN_LINES);
    assert_eq!(s.dup_line_frac, text::REPETITION_TEN_LINES_DUPLICATES as f64 / 10.0);
    assert_eq!(oracle::dup_line_frac(text::REPETITION_TEN_LINES), s.dup_line_frac);
}
