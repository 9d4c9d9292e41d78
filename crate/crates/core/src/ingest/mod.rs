//! WARC archives in, documents out.

mod embargo;
mod http;
mod warc;

pub use embargo::{embargo_filter, Embargo, EmbargoPolicy, STAGE as EMBARGO_STAGE};
pub use http::{decode_body, parse_http_response, sniff_html, HttpResponse};
pub use warc::{read_warc_stream, WarcError, WarcReader, WarcRecord, WarcWarning};

use crate::model::{Document, Reason};

pub const STAGE: &str = "ingest";

/// Annotation value under the `ingest` key telling later stages whether
/// `text` is still raw markup.
pub const KIND_HTML: &str = "html";
pub const KIND_TEXT: &str = "text";

fn is_html_mime(m: &str) -> bool {
    m == "text/html" || m == "application/xhtml+xml"
}

/// Maps a record to a document, or the reason it does not qualify.
///
/// Only `response` records qualify. Archived HTTP responses are unwrapped; the
/// effective media type is the HTTP `Content-Type`, or the WARC one for
/// bare payloads. Non-HTML types are sniffed for an HTML prologue.
pub fn classify_record(rec: &WarcRecord) -> Result<Document, Reason> {
    if rec.record_type() != "response" {
        return Err(Reason::IngestNotResponse);
    }
    let warc_ct = rec.content_type().unwrap_or("");
    let (body, content_type): (Vec<u8>, Option<String>) =
        if http::mime_essence(warc_ct) == "application/http" || rec.payload().starts_with(b"HTTP/") {
            match parse_http_response(rec.payload()) {
                Some(resp) => {
                    let ct = resp.header("Content-Type").map(str::to_string);
                    (resp.body, ct)
                }
                None => return Err(Reason::IngestUnsupportedContent),
            }
        } else {
            (rec.payload().to_vec(), rec.content_type().map(str::to_string))
        };

    let mime = content_type.as_deref().map(http::mime_essence).unwrap_or_default();
    let kind = if is_html_mime(&mime) || sniff_html(&body) {
        KIND_HTML
    } else if mime == "text/plain" {
        KIND_TEXT
    } else {
        return Err(Reason::IngestUnsupportedContent);
    };

    let text = decode_body(&body, content_type.as_deref(), kind == KIND_HTML);
    let id = match rec.record_id() {
        Some(id) => id.to_string(),
        None => format!(
            "{}@{}",
            rec.target_uri().unwrap_or("unknown"),
            rec.warc_date().to_rfc3339()
        ),
    };
    let mut doc = Document::new(id, text).with_date(rec.warc_date().date_naive());
    if let Some(uri) = rec.target_uri() {
        doc = doc.with_url(uri);
    }
    doc.annotate(STAGE, kind);
    Ok(doc)
}

/// `classify_record` without the reason.
pub fn record_to_document(rec: &WarcRecord) -> Option<Document> {
    classify_record(rec).ok()
}

/// One outcome of [`ingest_warc_file`].
#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    Doc(Document),
    /// A record that yields no document. `id` is the WARC record id when
    /// there is one, otherwise a position in the file.
    Drop { id: String, reason: Reason },
}

/// Streams every record of a (possibly gzipped) WARC file through `f`.
/// Damaged records are skipped and a truncated tail ends the file; both
/// become `ingest:malformed` drops and warnings, which are returned.
/// Anything else unreadable is a data error.
pub fn ingest_warc_file(
    path: &std::path::Path,
    mut f: impl FnMut(Ingested) -> crate::error::Result<()>,
) -> crate::error::Result<Vec<String>> {
    use crate::error::Error;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::at_path(path, e))?;
    let mut reader = read_warc_stream(file).map_err(|e| Error::at_path(path, e))?;
    let mut warnings = Vec::new();
    let mut n = 0u64;
    loop {
        match reader.next() {
            None => break,
            Some(Ok(rec)) => {
                n += 1;
                match classify_record(&rec) {
                    Ok(doc) => f(Ingested::Doc(doc))?,
                    Err(reason) => {
                        let id = rec.record_id().map_or_else(|| format!("{name}#{n}"), String::from);
                        f(Ingested::Drop { id, reason })?;
                    }
                }
            }
            Some(Err(e @ WarcError::Truncated { .. })) => {
                warnings.push(format!("{name}: {e}"));
                f(Ingested::Drop { id: format!("{name}#truncated"), reason: Reason::IngestMalformed })?;
                break;
            }
            Some(Err(e)) => return Err(Error::data(format!("{}: {e}", path.display()))),
        }
    }
    for w in reader.warnings() {
        warnings.push(format!("{name}: skipped damaged record at {w}"));
        f(Ingested::Drop { id: format!("{name}@{}", w.offset), reason: Reason::IngestMalformed })?;
    }
    Ok(warnings)
}
