//! Streaming WARC (ISO 28500) reader.
//!
//! A record is a version line, a block of `Name: value` header lines, an
//! empty line, exactly `Content-Length` payload bytes, and a CRLF CRLF
//! trailer. The reader holds at most one payload in memory. Damaged records
//! are skipped with a warning and the reader resynchronises on the next
//! `WARC/1.x` line; only a truncated tail or a non-WARC stream start end the
//! iteration with an error.

use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use chrono::{DateTime, FixedOffset};
use flate2::read::MultiGzDecoder;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WarcError {
    /// The stream does not start with a WARC version line.
    #[error("not a WARC stream: {0}")]
    Format(String),
    /// The stream ended in the middle of a record. Every complete record
    /// before this point has already been yielded.
    #[error("stream truncated at byte {offset} after {records} complete record(s)")]
    Truncated { records: u64, offset: u64 },
    #[error("i/o error reading WARC stream: {0}")]
    Io(#[from] io::Error),
}

/// A record that could not be parsed and was skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarcWarning {
    pub offset: u64,
    pub message: String,
}

impl fmt::Display for WarcWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "byte {}: {}", self.offset, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarcRecord {
    version: String,
    headers: Vec<(String, String)>,
    record_type: String,
    target_uri: Option<String>,
    warc_date: DateTime<FixedOffset>,
    content_type: Option<String>,
    payload: Vec<u8>,
}

impl WarcRecord {
    /// Builds a record from a version line, headers in file order, and the
    /// payload. The headers must include `WARC-Type`, `WARC-Date` and a
    /// `Content-Length` equal to the payload length.
    pub fn from_parts(
        version: impl Into<String>,
        headers: Vec<(String, String)>,
        payload: Vec<u8>,
    ) -> Result<Self, String> {
        let version = version.into();
        if version != "WARC/1.0" && version != "WARC/1.1" {
            return Err(format!("unsupported version line `{version}`"));
        }
        let find = |name: &str| {
            headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| v.clone())
        };
        let declared: usize = find("Content-Length")
            .ok_or("missing Content-Length")?
            .parse()
            .map_err(|_| "Content-Length is not a number".to_string())?;
        if declared != payload.len() {
            return Err(format!(
                "Content-Length {declared} but payload has {} bytes",
                payload.len()
            ));
        }
        let record_type = find("WARC-Type").ok_or("missing WARC-Type")?;
        let raw_date = find("WARC-Date").ok_or("missing WARC-Date")?;
        let warc_date = DateTime::parse_from_rfc3339(&raw_date)
            .map_err(|e| format!("bad WARC-Date `{raw_date}`: {e}"))?;
        let target_uri = find("WARC-Target-URI").map(|u| strip_angles(&u).to_string());
        let content_type = find("Content-Type");
        Ok(WarcRecord {
            version,
            headers,
            record_type,
            target_uri,
            warc_date,
            content_type,
            payload,
        })
    }

    /// Convenience constructor for a `WARC/1.0` record with the standard
    /// header set, in the order most writers emit it.
    pub fn new(
        record_type: &str,
        record_id: &str,
        date: DateTime<FixedOffset>,
        target_uri: Option<&str>,
        content_type: Option<&str>,
        payload: Vec<u8>,
    ) -> Self {
        let mut headers = vec![
            ("WARC-Type".to_string(), record_type.to_string()),
            ("WARC-Record-ID".to_string(), format!("<{record_id}>")),
            (
                "WARC-Date".to_string(),
                date.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            ),
        ];
        if let Some(uri) = target_uri {
            headers.push(("WARC-Target-URI".to_string(), uri.to_string()));
        }
        if let Some(ct) = content_type {
            headers.push(("Content-Type".to_string(), ct.to_string()));
        }
        headers.push(("Content-Length".to_string(), payload.len().to_string()));
        WarcRecord::from_parts("WARC/1.0", headers, payload).expect("well-formed by construction")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn headers(&self) -> &[(String, String)] {
        &self.headers
    }

    /// Case-insensitive header lookup.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn record_type(&self) -> &str {
        &self.record_type
    }

    pub fn record_id(&self) -> Option<&str> {
        self.header("WARC-Record-ID").map(strip_angles)
    }

    pub fn target_uri(&self) -> Option<&str> {
        self.target_uri.as_deref()
    }

    pub fn warc_date(&self) -> DateTime<FixedOffset> {
        self.warc_date
    }

    pub fn content_type(&self) -> Option<&str> {
        self.content_type.as_deref()
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<u8> {
        self.payload
    }

    /// Serializes the record back to WARC framing.
    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        out.write_all(self.version.as_bytes())?;
        out.write_all(b"\r\n")?;
        for (k, v) in &self.headers {
            write!(out, "{k}: {v}\r\n")?;
        }
        out.write_all(b"\r\n")?;
        out.write_all(&self.payload)?;
        out.write_all(b"\r\n\r\n")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 256);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

fn strip_angles(s: &str) -> &str {
    s.strip_prefix('<')
        .and_then(|s| s.strip_suffix('>'))
        .unwrap_or(s)
}

fn is_version_line(line: &[u8]) -> bool {
    let line = trim_eol(line);
    line == b"WARC/1.0" || line == b"WARC/1.1"
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    line.strip_suffix(b"\r").unwrap_or(line)
}

#[derive(Debug, PartialEq, Eq)]
enum State {
    Start,
    Running,
    Done,
}

/// Pull-based record iterator. Single consumer.
pub struct WarcReader<R> {
    inner: R,
    state: State,
    offset: u64,
    records: u64,
    /// a version line consumed while resynchronising
    pending_version: Option<String>,
    warnings: Vec<WarcWarning>,
}

/// Reads WARC records from a byte stream, gunzipping transparently when the
/// stream starts with the gzip magic (whole-stream or member-per-record).
pub fn read_warc_stream<R: Read + Send + 'static>(input: R) -> io::Result<WarcReader<Box<dyn BufRead + Send>>> {
    let mut buffered = BufReader::new(input);
    let head = buffered.fill_buf()?;
    let gz = head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b;
    let inner: Box<dyn BufRead + Send> = if gz {
        Box::new(BufReader::new(MultiGzDecoder::new(buffered)))
    } else {
        Box::new(buffered)
    };
    Ok(WarcReader::new(inner))
}

impl<R: BufRead> WarcReader<R> {
    pub fn new(inner: R) -> Self {
        WarcReader {
            inner,
            state: State::Start,
            offset: 0,
            records: 0,
            pending_version: None,
            warnings: Vec::new(),
        }
    }

    /// Records skipped so far because they were damaged.
    pub fn warnings(&self) -> &[WarcWarning] {
        &self.warnings
    }

    pub fn skipped(&self) -> usize {
        self.warnings.len()
    }

    pub fn records_read(&self) -> u64 {
        self.records
    }

    fn read_line(&mut self, buf: &mut Vec<u8>) -> io::Result<usize> {
        buf.clear();
        let n = self.inner.read_until(b'\n', buf)?;
        self.offset += n as u64;
        Ok(n)
    }

    fn warn(&mut self, offset: u64, message: impl Into<String>) {
        let w = WarcWarning {
            offset,
            message: message.into(),
        };
        log::warn!("skipping damaged WARC record at {w}");
        self.warnings.push(w);
    }

    fn truncated(&mut self) -> Option<Result<WarcRecord, WarcError>> {
        self.state = State::Done;
        Some(Err(WarcError::Truncated {
            records: self.records,
            offset: self.offset,
        }))
    }

    /// Skips forward to the next version line. Returns false at EOF.
    fn resync(&mut self) -> io::Result<bool> {
        let mut line = Vec::new();
        loop {
            if self.read_line(&mut line)? == 0 {
                return Ok(false);
            }
            if is_version_line(&line) {
                self.pending_version = Some(String::from_utf8_lossy(trim_eol(&line)).into_owned());
                return Ok(true);
            }
        }
    }

    /// Finds the next version line, skipping blank separator lines.
    fn next_version(&mut self) -> Result<Option<String>, WarcError> {
        if let Some(v) = self.pending_version.take() {
            return Ok(Some(v));
        }
        let mut line = Vec::new();
        loop {
            let start = self.offset;
            if self.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !line.ends_with(b"\n") && self.state == State::Running {
                // the stream stopped inside what may be a version line
                return Err(WarcError::Truncated {
                    records: self.records,
                    offset: self.offset,
                });
            }
            if trim_eol(&line).is_empty() {
                continue;
            }
            if is_version_line(&line) {
                return Ok(Some(String::from_utf8_lossy(trim_eol(&line)).into_owned()));
            }
            if self.state == State::Start {
                let shown: String = String::from_utf8_lossy(trim_eol(&line)).chars().take(40).collect();
                return Err(WarcError::Format(format!("expected WARC/1.0 or WARC/1.1, found `{shown}`")));
            }
            self.warn(start, "garbage between records");
            if !self.resync()? {
                return Ok(None);
            }
            return Ok(self.pending_version.take());
        }
    }

    fn read_record(&mut self) -> Option<Result<WarcRecord, WarcError>> {
        loop {
            let record_start = self.offset;
            let version = match self.next_version() {
                Ok(Some(v)) => v,
                Ok(None) => {
                    self.state = State::Done;
                    return None;
                }
                Err(e) => {
                    self.state = State::Done;
                    return Some(Err(e));
                }
            };
            self.state = State::Running;

            // header block
            let mut headers: Vec<(String, String)> = Vec::new();
            let mut line = Vec::new();
            let mut bad_header = None;
            loop {
                match self.read_line(&mut line) {
                    Ok(0) => return self.truncated(),
                    Ok(_) => {}
                    Err(e) => {
                        self.state = State::Done;
                        return Some(Err(e.into()));
                    }
                }
                if !line.ends_with(b"\n") {
                    return self.truncated();
                }
                let content = trim_eol(&line);
                if content.is_empty() {
                    break;
                }
                if content[0] == b' ' || content[0] == b'\t' {
                    // folded continuation of the previous value
                    match headers.last_mut() {
                        Some((_, v)) => {
                            v.push(' ');
                            v.push_str(String::from_utf8_lossy(content).trim());
                        }
                        None => bad_header = Some("continuation line before any header".to_string()),
                    }
                    continue;
                }
                let text = String::from_utf8_lossy(content);
                match text.split_once(':') {
                    Some((k, v)) if !k.trim().is_empty() => {
                        headers.push((k.trim().to_string(), v.trim().to_string()))
                    }
                    _ => bad_header = Some(format!("invalid header line `{text}`")),
                }
            }

            let declared = headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case("Content-Length"))
                .and_then(|(_, v)| v.parse::<u64>().ok());
            let Some(length) = declared else {
                self.warn(record_start, "missing or invalid Content-Length");
                match self.resync() {
                    Ok(true) => continue,
                    Ok(false) => {
                        self.state = State::Done;
                        return None;
                    }
                    Err(e) => {
                        self.state = State::Done;
                        return Some(Err(e.into()));
                    }
                }
            };

            let mut payload = Vec::with_capacity(length.min(1 << 24) as usize);
            match (&mut self.inner).take(length).read_to_end(&mut payload) {
                Ok(n) => {
                    self.offset += n as u64;
                    if (n as u64) < length {
                        return self.truncated();
                    }
                }
                Err(e) => {
                    self.state = State::Done;
                    return Some(Err(e.into()));
                }
            }

            // trailer: CRLF CRLF (a bare LF LF is tolerated)
            let trailer_ok = match self.consume_trailer() {
                Ok(ok) => ok,
                Err(e) => {
                    self.state = State::Done;
                    return Some(Err(e.into()));
                }
            };
            if !trailer_ok {
                self.warn(record_start, "record trailer is not CRLF CRLF");
            }

            if let Some(msg) = bad_header {
                self.warn(record_start, msg);
                continue;
            }
            match WarcRecord::from_parts(version, headers, payload) {
                Ok(rec) => {
                    self.records += 1;
                    return Some(Ok(rec));
                }
                Err(msg) => {
                    self.warn(record_start, msg);
                    continue;
                }
            }
        }
    }

    /// Consumes the record trailer. Returns false when the bytes after the
    /// payload are not a trailer; those bytes are left for resync.
    fn consume_trailer(&mut self) -> io::Result<bool> {
        for expected in [&b"\r\n\r\n"[..], &b"\n\n"[..]] {
            let buf = self.inner.fill_buf()?;
            if buf.is_empty() {
                // EOF straight after the payload: keep the record
                return Ok(true);
            }
            if buf.len() >= expected.len() && buf.starts_with(expected) {
                self.inner.consume(expected.len());
                self.offset += expected.len() as u64;
                return Ok(true);
            }
            if buf.len() < expected.len() {
                // the trailer straddles the buffer boundary; go byte by byte
                let mut got = Vec::with_capacity(4);
                let mut byte = [0u8; 1];
                while got.len() < 4 {
                    if self.inner.read(&mut byte)? == 0 {
                        break;
                    }
                    self.offset += 1;
                    got.push(byte[0]);
                    if got == b"\r\n\r\n" || got == b"\n\n" {
                        return Ok(true);
                    }
                    if !b"\r\n\r\n".starts_with(&got) && !b"\n\n".starts_with(&got) {
                        return Ok(false);
                    }
                }
                return Ok(got.is_empty());
            }
        }
        Ok(false)
    }
}

impl<R: BufRead> Iterator for WarcReader<R> {
    type Item = Result<WarcRecord, WarcError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.state == State::Done {
            return None;
        }
        self.read_record()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn date() -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339("2019-03-04T10:20:30Z").unwrap()
    }

    fn reader(bytes: Vec<u8>) -> WarcReader<Box<dyn BufRead + Send>> {
        read_warc_stream(Cursor::new(bytes)).unwrap()
    }

    // Built byte-for-byte from the ISO 28500 framing, not via WarcRecord.
    const MINIMAL: &[u8] = b"WARC/1.0\r\n\
WARC-Type: response\r\n\
WARC-Record-ID: <urn:uuid:00000000-0000-0000-0000-000000000001>\r\n\
WARC-Date: 2019-03-04T10:20:30Z\r\n\
WARC-Target-URI: http://exemplo.pt/\r\n\
Content-Type: text/html\r\n\
Content-Length: 25\r\n\
\r\n\
<html><p>Ol\xc3\xa1!</p></html>\r\n\r\n";

    #[test]
    fn minimal_record_fields() {
        // 24 chars, 25 bytes: á is two bytes in UTF-8
        let recs: Vec<_> = reader(MINIMAL.to_vec()).collect::<Result<_, _>>().unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.payload().len(), 25);
        assert_eq!(r.payload(), "<html><p>Olá!</p></html>".as_bytes());
        assert_eq!(r.record_type(), "response");
        assert_eq!(r.target_uri(), Some("http://exemplo.pt/"));
        assert_eq!(r.content_type(), Some("text/html"));
        assert_eq!(r.warc_date(), date());
        assert_eq!(r.record_id(), Some("urn:uuid:00000000-0000-0000-0000-000000000001"));
        assert_eq!(r.to_bytes(), MINIMAL);
    }

    #[test]
    fn empty_input_is_empty_sequence() {
        assert_eq!(reader(Vec::new()).count(), 0);
    }

    #[test]
    fn non_warc_start_is_format_error() {
        let mut r = reader(b"<html>not a warc</html>\n".to_vec());
        assert!(matches!(r.next(), Some(Err(WarcError::Format(_)))));
        assert!(r.next().is_none());
    }

    #[test]
    fn truncated_tail_after_complete_records() {
        let a = WarcRecord::new("response", "urn:a", date(), Some("http://a.pt/"), Some("text/plain"), b"primeiro".to_vec());
        let b = WarcRecord::new("response", "urn:b", date(), Some("http://b.pt/"), Some("text/plain"), b"segundo registo".to_vec());
        let mut bytes = a.to_bytes();
        let full_b = b.to_bytes();
        bytes.extend_from_slice(&full_b[..full_b.len() - 10]);
        let mut r = reader(bytes);
        assert_eq!(r.next().unwrap().unwrap(), a);
        match r.next() {
            Some(Err(WarcError::Truncated { records, .. })) => assert_eq!(records, 1),
            other => panic!("expected truncation, got {other:?}"),
        }
        assert!(r.next().is_none());
    }

    #[test]
    fn damaged_record_is_skipped_with_warning() {
        let good = WarcRecord::new("response", "urn:g", date(), None, Some("text/plain"), b"ok".to_vec());
        let mut bytes = b"WARC/1.0\r\nWARC-Type: response\r\nno colon here\r\nContent-Length: 3\r\n\r\nabc\r\n\r\n".to_vec();
        bytes.extend(good.to_bytes());
        // a record without Content-Length forces a resync
        bytes.extend_from_slice(b"WARC/1.0\r\nWARC-Type: metadata\r\n\r\njunk junk\r\n\r\n");
        bytes.extend(good.to_bytes());
        let mut r = reader(bytes);
        let recs: Vec<_> = r.by_ref().collect::<Result<_, _>>().unwrap();
        assert_eq!(recs, vec![good.clone(), good]);
        assert_eq!(r.skipped(), 2);
    }

    #[test]
    fn content_length_mismatch_rejected_by_constructor() {
        let headers = vec![
            ("WARC-Type".into(), "response".into()),
            ("WARC-Date".into(), "2020-01-01T00:00:00Z".into()),
            ("Content-Length".into(), "5".into()),
        ];
        assert!(WarcRecord::from_parts("WARC/1.0", headers, b"abc".to_vec()).is_err());
    }

    #[test]
    fn folded_header_continuation() {
        let bytes = b"WARC/1.1\r\nWARC-Type: resource\r\nWARC-Date: 2020-01-01T00:00:00Z\r\nX-Note: first\r\n  second\r\nContent-Length: 0\r\n\r\n\r\n\r\n";
        let recs: Vec<_> = reader(bytes.to_vec()).collect::<Result<_, _>>().unwrap();
        assert_eq!(recs[0].header("x-note"), Some("first second"));
        assert_eq!(recs[0].version(), "WARC/1.1");
    }
}
