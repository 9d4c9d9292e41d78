//! A small synthetic web crawl: HTML pages in WARC shards, each page built
//! to trip (or pass) a particular stage, plus an external score file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::text::document_of_kind;
use crate::warc::{http_html, uuid_like, RecordSpec};
use crate::words::sentence;

/// Captures dated on or after this day fall inside a one-year embargo
/// when processing on [`PROCESSING_DATE`].
pub const RECENT_FROM: &str = "2023-06-02";
pub const PROCESSING_DATE: &str = "2024-06-01";

/// Page kinds in rotation order. Text kinds come from
/// [`crate::text::DOCUMENT_KINDS`]; the rest are crawl-level cases.
pub const PAGE_KINDS: &[&str] = &[
    "prose",
    "prose_long",
    "repeated_lines",
    "short",
    "english",
    "brazilian_host",
    "exact_duplicate",
    "near_duplicate",
    "prose_pii",
    "too_recent",
    "request",
    "bullets",
    "hashtags",
    "prose",
    "prose_long",
    "repeated_paragraphs",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WebPage {
    pub kind: &'static str,
    pub record: RecordSpec,
    /// The body text before wrapping in HTML; empty for requests.
    pub text: String,
}

fn html_page(title: &str, text: &str) -> String {
    let body: String = text
        .split("\n\n")
        .map(|p| format!("<p>{}</p>\n", p.replace('\n', "<br>\n")))
        .collect();
    format!(
        "<!DOCTYPE html>\n<html><head><title>{title}</title><script>var x = 1;</script></head>\n<body>\n\
         <nav><a href=\"/\">Início</a> | <a href=\"/noticias\">Notícias</a> | <a href=\"/contactos\">Contactos</a></nav>\n\
         <main>\n{body}</main>\n<footer>© Jornal Local</footer>\n</body></html>"
    )
}

/// `size` pages cycling through [`PAGE_KINDS`].
pub fn web_pages(size: usize, seed: u64) -> Vec<WebPage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prose: Vec<String> = Vec::new();
    let mut pages = Vec::with_capacity(size);
    for i in 0..size {
        let kind = PAGE_KINDS[i % PAGE_KINDS.len()];
        let id = uuid_like((seed << 24) ^ i as u64);
        let host = if kind == "brazilian_host" {
            format!("noticias{}.com.br", rng.random_range(0..20))
        } else {
            format!("jornal{}.pt", rng.random_range(0..40))
        };
        let uri = format!("https://{host}/artigo/{i}");
        let date = if kind == "too_recent" {
            format!("2024-0{}-{:02}T12:00:00Z", rng.random_range(1..6), rng.random_range(1..28))
        } else {
            format!("20{}-{:02}-{:02}T08:30:00Z", rng.random_range(15..23), rng.random_range(1..13), rng.random_range(1..29))
        };
        let text = match kind {
            "brazilian_host" | "too_recent" => document_of_kind("prose", &mut rng),
            "exact_duplicate" => match prose.choose(&mut rng) {
                Some(t) => t.clone(),
                None => document_of_kind("prose", &mut rng),
            },
            "near_duplicate" => match prose.choose(&mut rng) {
                Some(t) => format!("{t} {}", sentence(&mut rng)),
                None => document_of_kind("prose", &mut rng),
            },
            "request" => String::new(),
            k => document_of_kind(k, &mut rng),
        };
        if kind.starts_with("prose") {
            prose.push(text.clone());
        }
        let record = if kind == "request" {
            RecordSpec {
                record_type: "request".into(),
                record_id: id,
                date,
                target_uri: Some(uri),
                content_type: Some("application/http; msgtype=request".into()),
                payload: format!("GET /artigo/{i} HTTP/1.1\r\nHost: {host}\r\n\r\n").into_bytes(),
            }
        } else {
            RecordSpec {
                record_type: "response".into(),
                record_id: id,
                date,
                target_uri: Some(uri),
                content_type: Some("application/http; msgtype=response".into()),
                payload: http_html(&html_page(&format!("Artigo {i}"), &text)),
            }
        };
        pages.push(WebPage { kind, record, text });
    }
    pages
}

/// Writes pages round-robin into `shards` files named
/// `crawl-NNN.warc.gz` (gzip member per record) and returns their paths.
pub fn write_warc_shards(dir: &Path, pages: &[WebPage], shards: usize) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let shards = shards.max(1);
    let mut files = Vec::with_capacity(shards);
    for s in 0..shards {
        let path = dir.join(format!("crawl-{s:03}.warc.gz"));
        let mut out = io::BufWriter::new(fs::File::create(&path)?);
        for page in pages.iter().skip(s).step_by(shards) {
            let mut gz = GzEncoder::new(Vec::new(), Compression::fast());
            gz.write_all(&page.record.to_bytes())?;
            out.write_all(&gz.finish()?)?;
        }
        out.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// `{id, score}` lines for roughly nine in ten response pages, with
/// scores spread over [0, 1].
pub fn write_scores(path: &Path, pages: &[WebPage], seed: u64) -> io::Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5c0e);
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    let mut n = 0;
    for p in pages.iter().filter(|p| p.record.record_type == "response") {
        if rng.random_range(0..10) == 0 {
            continue;
        }
        let score = (rng.random::<f64>() * 1000.0).round() / 1000.0;
        writeln!(out, "{}", json!({"id": p.record.record_id, "score": score}))?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}
