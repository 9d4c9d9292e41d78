//! WARC fixtures written byte by byte, and a boundary scanner that reads
//! them back without any WARC library.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::words;

/// What a fixture record was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordSpec {
    pub record_type: String,
    pub record_id: String,
    pub date: String,
    pub target_uri: Option<String>,
    pub content_type: Option<String>,
    pub payload: Vec<u8>,
}

impl RecordSpec {
    /// Header lines in writing order, `Content-Length` last.
    pub fn headers(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("WARC-Type".to_string(), self.record_type.clone()),
            ("WARC-Record-ID".to_string(), format!("<{}>", self.record_id)),
            ("WARC-Date".to_string(), self.date.clone()),
        ];
        if let Some(u) = &self.target_uri {
            h.push(("WARC-Target-URI".to_string(), u.clone()));
        }
        if let Some(c) = &self.content_type {
            h.push(("Content-Type".to_string(), c.clone()));
        }
        h.push(("Content-Length".to_string(), self.payload.len().to_string()));
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = b"WARC/1.0\r\n".to_vec();
        for (k, v) in self.headers() {
            out.extend_from_slice(format!("{k}: {v}\r\n").as_bytes());
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(b"\r\n\r\n");
        out
    }
}

pub fn uuid_like(n: u64) -> String {
    format!("urn:uuid:00000000-0000-4000-8000-{n:012x}")
}

/// An HTTP/1.1 response wrapping an HTML body.
pub fn http_html(body: &str) -> Vec<u8> {
    let mut out = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )
    .into_bytes();
    out.extend_from_slice(body.as_bytes());
    out
}

/// `size` records, cycling through a warcinfo, a request and HTML responses.
pub fn minimal_records(size: usize, seed: u64) -> Vec<RecordSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let day = 1 + rng.random_range(0..28);
            let date = format!("2019-03-{day:02}T10:{:02}:{:02}Z", i % 60, (i * 7) % 60);
            let uri = format!("http://exemplo{}.pt/pagina/{i}", rng.random_range(0..50));
            let id = uuid_like(seed.wrapping_mul(1_000_003).wrapping_add(i as u64) & 0xffff_ffff_ffff);
            match i % 4 {
                3 => RecordSpec {
                    record_type: "request".into(),
                    record_id: id,
                    date,
                    target_uri: Some(uri.clone()),
                    content_type: Some("application/http; msgtype=request".into()),
                    payload: format!("GET /pagina/{i} HTTP/1.1\r\nHost: exemplo.pt\r\n\r\n").into_bytes(),
                },
                _ => {
                    let html = format!("<html><body><p>{}</p></body></html>", words::paragraph(&mut rng, 2));
                    RecordSpec {
                        record_type: "response".into(),
                        record_id: id,
                        date,
                        target_uri: Some(uri),
                        content_type: Some("application/http; msgtype=response".into()),
                        payload: http_html(&html),
                    }
                }
            }
        })
        .collect()
}

pub fn serialize(records: &[RecordSpec]) -> Vec<u8> {
    records.iter().flat_map(RecordSpec::to_bytes).collect()
}

/// A well-formed file followed by the first `keep` bytes of one more
/// record.
pub fn truncated_tail(records: &[RecordSpec], extra: &RecordSpec, keep: usize) -> Vec<u8> {
    let mut out = serialize(records);
    let tail = extra.to_bytes();
    out.extend_from_slice(&tail[..keep.min(tail.len() - 1)]);
    out
}

/// One record located by [`scan_boundaries`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScannedRecord {
    pub start: usize,
    pub headers: Vec<(String, String)>,
    pub payload: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scan {
    pub records: Vec<ScannedRecord>,
    /// Byte offset where an incomplete record starts, if the file ends
    /// inside one.
    pub truncated_at: Option<usize>,
}

fn find(hay: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    hay.get(from..)?.windows(needle.len()).position(|w| w == needle).map(|p| p + from)
}

/// Walks `WARC/1.x` + headers + blank line + `Content-Length` bytes +
/// `\r\n\r\n`, nothing more.
pub fn scan_boundaries(bytes: &[u8]) -> Scan {
    let mut records = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let start = pos;
        let Some(head_end) = find(bytes, b"\r\n\r\n", pos) else {
            return Scan { records, truncated_at: Some(start) };
        };
        let head = String::from_utf8_lossy(&bytes[pos..head_end]).into_owned();
        let mut lines = head.split("\r\n");
        let version = lines.next().unwrap_or_default();
        if version != "WARC/1.0" && version != "WARC/1.1" {
            return Scan { records, truncated_at: Some(start) };
        }
        let headers: Vec<(String, String)> = lines
            .filter_map(|l| l.split_once(':').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
            .collect();
        let len: usize = headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
            .and_then(|(_, v)| v.parse().ok())
            .unwrap_or(0);
        let body = head_end + 4;
        let end = body + len + 4;
        if end > bytes.len() || &bytes[body + len..end] != b"\r\n\r\n" {
            return Scan { records, truncated_at: Some(start) };
        }
        records.push(ScannedRecord { start, headers, payload: body..body + len });
        pos = end;
    }
    Scan { records, truncated_at: None }
}
