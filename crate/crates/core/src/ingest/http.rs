//! Unwrapping archived HTTP responses and decoding their bodies.

use std::io::Read;

use encoding_rs::Encoding;
use flate2::read::{GzDecoder, ZlibDecoder};

/// An archived HTTP response split into its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Parses `HTTP/1.x <status> ...` + headers + body. Returns `None` when the
/// payload does not start with an HTTP status line or has no header end.
pub fn parse_http_response(payload: &[u8]) -> Option<HttpResponse> {
    if !payload.starts_with(b"HTTP/") {
        return None;
    }
    let (head_end, body_start) = find_header_end(payload)?;
    let head = String::from_utf8_lossy(&payload[..head_end]);
    let mut lines = head.lines();
    let status_line = lines.next()?;
    let status = status_line.split_whitespace().nth(1)?.parse().ok()?;
    let headers = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut resp = HttpResponse {
        status,
        headers,
        body: payload[body_start..].to_vec(),
    };
    if resp
        .header("Transfer-Encoding")
        .is_some_and(|te| te.to_ascii_lowercase().contains("chunked"))
    {
        if let Some(body) = dechunk(&resp.body) {
            resp.body = body;
        }
    }
    let encoding = resp.header("Content-Encoding").map(|e| e.trim().to_ascii_lowercase());
    if let Some(enc) = encoding {
        let mut out = Vec::new();
        let ok = match enc.as_str() {
            "gzip" | "x-gzip" => GzDecoder::new(&resp.body[..]).read_to_end(&mut out).is_ok(),
            "deflate" => ZlibDecoder::new(&resp.body[..]).read_to_end(&mut out).is_ok(),
            _ => false,
        };
        if ok {
            resp.body = out;
        }
    }
    Some(resp)
}

fn find_header_end(buf: &[u8]) -> Option<(usize, usize)> {
    let crlf = buf.windows(4).position(|w| w == b"\r\n\r\n").map(|i| (i, i + 4));
    let lf = buf.windows(2).position(|w| w == b"\n\n").map(|i| (i, i + 2));
    match (crlf, lf) {
        (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
        (a, b) => a.or(b),
    }
}

/// Decodes `Transfer-Encoding: chunked`. `None` on malformed framing.
fn dechunk(mut buf: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::with_capacity(buf.len());
    loop {
        let eol = buf.iter().position(|&b| b == b'\n')?;
        let size_line = String::from_utf8_lossy(&buf[..eol]);
        let size_hex = size_line.trim().split(';').next()?.trim();
        let size = usize::from_str_radix(size_hex, 16).ok()?;
        buf = &buf[eol + 1..];
        if size == 0 {
            return Some(out);
        }
        if buf.len() < size {
            return None;
        }
        out.extend_from_slice(&buf[..size]);
        buf = &buf[size..];
        buf = buf.strip_prefix(b"\r\n").or_else(|| buf.strip_prefix(b"\n")).unwrap_or(buf);
    }
}

/// Media type without parameters, lowercased.
pub fn mime_essence(content_type: &str) -> String {
    content_type
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase()
}

/// The `charset=` parameter of a content type, if any.
pub fn charset_param(content_type: &str) -> Option<String> {
    content_type.split(';').skip(1).find_map(|p| {
        let (k, v) = p.split_once('=')?;
        k.trim()
            .eq_ignore_ascii_case("charset")
            .then(|| v.trim().trim_matches(['"', '\'']).to_ascii_lowercase())
    })
}

/// `<meta charset=...>` or `<meta http-equiv content="...; charset=...">`
/// within the first 1024 bytes.
fn meta_charset(body: &[u8]) -> Option<String> {
    let head = String::from_utf8_lossy(&body[..body.len().min(1024)]).to_ascii_lowercase();
    let idx = head.find("charset=")?;
    let rest = head[idx + "charset=".len()..].trim_start_matches(['"', '\'']);
    let end = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'))
        .unwrap_or(rest.len());
    (end > 0).then(|| rest[..end].to_string())
}

/// True when the leading bytes look like an HTML document.
pub fn sniff_html(body: &[u8]) -> bool {
    let body = body.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(body);
    let start = body.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(body.len());
    let head: Vec<u8> = body[start..].iter().take(16).map(u8::to_ascii_lowercase).collect();
    head.starts_with(b"<!doctype") || head.starts_with(b"<html")
}

/// Decodes a body to text. A declared legacy charset (header first, then
/// HTML meta) is honored; everything else is UTF-8 with U+FFFD replacing
/// ill-formed sequences.
pub fn decode_body(body: &[u8], content_type: Option<&str>, is_html: bool) -> String {
    let declared = content_type
        .and_then(charset_param)
        .or_else(|| if is_html { meta_charset(body) } else { None });
    let encoding = declared
        .and_then(|label| Encoding::for_label(label.as_bytes()))
        .unwrap_or(encoding_rs::UTF_8);
    if encoding == encoding_rs::UTF_8 {
        let body = body.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(body);
        return String::from_utf8_lossy(body).into_owned();
    }
    let (text, _, _) = encoding.decode(body);
    text.into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_status_headers_body() {
        let payload = b"HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=UTF-8\r\n\r\n<p>oi</p>";
        let r = parse_http_response(payload).unwrap();
        assert_eq!(r.status, 200);
        assert_eq!(r.header("content-type"), Some("text/html; charset=UTF-8"));
        assert_eq!(r.body, b"<p>oi</p>");
    }

    #[test]
    fn chunked_body_is_reassembled() {
        let payload = b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n4\r\nOl\xc3\xa1\r\n6\r\n mundo\r\n0\r\n\r\n";
        let r = parse_http_response(payload).unwrap();
        assert_eq!(String::from_utf8(r.body).unwrap(), "Olá mundo");
    }

    #[test]
    fn latin1_declared_charset_is_honored() {
        // "ação" in ISO-8859-1
        let body = b"a\xe7\xe3o";
        assert_eq!(decode_body(body, Some("text/html; charset=ISO-8859-1"), true), "ação");
        let meta = b"<meta charset=\"windows-1252\"><p>a\xe7\xe3o</p>";
        assert_eq!(decode_body(meta, Some("text/html"), true), "<meta charset=\"windows-1252\"><p>ação</p>");
    }

    #[test]
    fn utf8_with_replacement() {
        assert_eq!(decode_body(b"ab\xffcd", None, false), "ab\u{FFFD}cd");
    }

    #[test]
    fn html_sniffing() {
        assert!(sniff_html(b"  \n<!DOCTYPE html><html>"));
        assert!(sniff_html(b"\xEF\xBB\xBF<HTML>"));
        assert!(!sniff_html(b"%PDF-1.4"));
        assert!(!sniff_html(b"plain words"));
    }

    #[test]
    fn mime_helpers() {
        assert_eq!(mime_essence("Text/HTML; charset=latin1"), "text/html");
        assert_eq!(charset_param("text/html; Charset=\"Latin1\""), Some("latin1".into()));
        assert_eq!(charset_param("text/html"), None);
    }
}
