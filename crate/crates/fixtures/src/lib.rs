//! Seeded fixture generators and brute-force oracles.
//!
//! Nothing here depends on the main crate: fixtures are written byte by
//! byte and the oracles recompute every statistic the slow, obvious way, so
//! that tests comparing the two are meaningful.
//!
//! Every generator is a pure function of `(size, seed)`.

pub mod corpus;
pub mod oracle;
pub mod overlap;
pub mod pii;
pub mod sft;
pub mod text;
pub mod warc;
pub mod words;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureKind {
    WarcMinimal,
    PortugueseParagraphs,
    RepetitionText,
    MixedDocuments,
    PiiCases,
    /// Set pairs at the given target Jaccard.
    OverlapPairs(f64),
    SftEntries,
    WebCrawl,
}

impl FixtureKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "warc-minimal" => FixtureKind::WarcMinimal,
            "portuguese-paragraphs" => FixtureKind::PortugueseParagraphs,
            "repetition-text" => FixtureKind::RepetitionText,
            "mixed-documents" => FixtureKind::MixedDocuments,
            "pii-cases" => FixtureKind::PiiCases,
            "sft-entries" => FixtureKind::SftEntries,
            "web-crawl" => FixtureKind::WebCrawl,
            other => {
                let j = other.strip_prefix("overlap-pairs:")?.parse().ok()?;
                FixtureKind::OverlapPairs(j)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixtureOutput {
    pub files: Vec<PathBuf>,
    /// For overlap pairs: the Jaccard actually built, nearest to the target
    /// the union size allows.
    pub achieved_jaccard: Option<f64>,
}

/// Union size of generated overlap pairs.
pub const OVERLAP_UNION: usize = 200;

fn write_jsonl(path: &Path, rows: impl IntoIterator<Item = Value>) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

fn docs(prefix: &str, texts: impl IntoIterator<Item = String>) -> Vec<Value> {
    texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| json!({"id": format!("{prefix}-{i:06}"), "text": t}))
        .collect()
}

/// Writes one fixture into `dir` (created if missing).
pub fn generate_fixture(spec: &FixtureSpec, dir: &Path) -> io::Result<FixtureOutput> {
    fs::create_dir_all(dir)?;
    let FixtureSpec { kind, size, seed } = *spec;
    let mut out = FixtureOutput::default();
    match kind {
        FixtureKind::WarcMinimal => {
            let path = dir.join("minimal.warc");
            fs::write(&path, warc::serialize(&warc::minimal_records(size, seed)))?;
            out.files.push(path);
        }
        FixtureKind::PortugueseParagraphs => {
            let path = dir.join("paragraphs.jsonl");
            write_jsonl(&path, docs("para", text::portuguese_paragraphs(size, seed)))?;
            out.files.push(path);
        }
        FixtureKind::RepetitionText => {
            let path = dir.join("repetition.jsonl");
            let mut texts = vec![text::REPETITION_TEN_LINES.to_string()];
            texts.extend(text::repetition_text(size.saturating_sub(1), seed));
            write_jsonl(&path, docs("rep", texts))?;
            out.files.push(path);
        }
        FixtureKind::MixedDocuments => {
            let path = dir.join("mixed.jsonl");
            let rows = text::mixed_documents(size, seed)
                .into_iter()
                .enumerate()
                .map(|(i, (k, t))| json!({"id": format!("mix-{i:06}"), "text": t, "annotations": {"fixture": k}}));
            write_jsonl(&path, rows)?;
            out.files.push(path);
        }
        FixtureKind::PiiCases => {
            let path = dir.join("pii_cases.jsonl");
            let rows = pii::PII_CASES
                .iter()
                .map(|c| json!({"name": c.name, "input": c.input, "expected": c.expected}));
            write_jsonl(&path, rows)?;
            out.files.push(path);
        }
        FixtureKind::OverlapPairs(j) => {
            let path = dir.join(format!("overlap_pairs_{j}.jsonl"));
            let (pairs, achieved) = overlap::overlap_pairs(j, OVERLAP_UNION, size, seed);
            let rows = pairs.into_iter().map(|p| json!({"a": p.a, "b": p.b, "jaccard": achieved}));
            write_jsonl(&path, rows)?;
            out.files.push(path);
            out.achieved_jaccard = Some(achieved);
        }
        FixtureKind::SftEntries => {
            let path = dir.join("sft.jsonl");
            write_jsonl(&path, sft::sft_entries(size, seed, "synthetic"))?;
            out.files.push(path);
        }
        FixtureKind::WebCrawl => {
            let pages = corpus::web_pages(size, seed);
            out.files = corpus::write_warc_shards(&dir.join("crawl"), &pages, 4)?;
            let scores = dir.join("scores.jsonl");
            corpus::write_scores(&scores, &pages, seed)?;
            out.files.push(scores);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = tempdir("a");
        let b = tempdir("b");
        for kind in [FixtureKind::WarcMinimal, FixtureKind::SftEntries, FixtureKind::OverlapPairs(0.5), FixtureKind::WebCrawl] {
            let spec = FixtureSpec { kind, size: 20, seed: 9 };
            let fa = generate_fixture(&spec, &a).unwrap();
            let fb = generate_fixture(&spec, &b).unwrap();
            for (x, y) in fa.files.iter().zip(&fb.files) {
                assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{kind:?}");
            }
        }
        let _ = fs::remove_dir_all(a);
        let _ = fs::remove_dir_all(b);
    }

    #[test]
    fn nearest_jaccard_is_reported() {
        let dir = tempdir("j");
        let out = generate_fixture(&FixtureSpec { kind: FixtureKind::OverlapPairs(1.0 / 3.0), size: 2, seed: 1 }, &dir).unwrap();
        assert_eq!(out.achieved_jaccard, Some(67.0 / 200.0));
        let _ = fs::remove_dir_all(dir);
    }

    #[test]
    fn minimal_warc_scans_cleanly() {
        let bytes = warc::serialize(&warc::minimal_records(12, 4));
        let scan = warc::scan_boundaries(&bytes);
        assert_eq!(scan.records.len(), 12);
        assert_eq!(scan.truncated_at, None);
    }

    fn tempdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("forge-fixtures-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn parse_kinds() {
        assert_eq!(FixtureKind::parse("overlap-pairs:0.8"), Some(FixtureKind::OverlapPairs(0.8)));
        assert_eq!(FixtureKind::parse("web-crawl"), Some(FixtureKind::WebCrawl));
        assert_eq!(FixtureKind::parse("nope"), None);
    }
}
