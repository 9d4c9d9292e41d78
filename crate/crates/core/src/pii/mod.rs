//! Personal-data redaction (e-mail, phone, public IP) and mojibake repair.

mod mojibake;

use std::net::{Ipv4Addr, Ipv6Addr};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use mojibake::{fix_encoding, MojibakeTable};

pub const STAGE: &str = "pii";

pub const EMAIL_TOKEN: &str = "<EMAIL>";
pub const PHONE_TOKEN: &str = "<PHONE>";
pub const IP_TOKEN: &str = "<IP>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PiiCategory {
    Email,
    Phone,
    Ip,
}

impl PiiCategory {
    pub fn token(self) -> &'static str {
        match self {
            PiiCategory::Email => EMAIL_TOKEN,
            PiiCategory::Phone => PHONE_TOKEN,
            PiiCategory::Ip => IP_TOKEN,
        }
    }
}

/// One redacted span, as byte offsets into the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub start: usize,
    pub end: usize,
    pub category: PiiCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionReport {
    pub emails: u64,
    pub phones: u64,
    pub public_ips: u64,
    /// Sorted, non-overlapping.
    pub replacements: Vec<Replacement>,
}

impl RedactionReport {
    pub fn total(&self) -> u64 {
        self.emails + self.phones + self.public_ips
    }

    /// Sums counts and concatenates spans; spans of different texts are not
    /// comparable, so only the counts are meaningful after a merge.
    pub fn add_counts(&mut self, other: &RedactionReport) {
        self.emails += other.emails;
        self.phones += other.phones;
        self.public_ips += other.public_ips;
    }
}

static EMAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?(?:\.[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?)*\.[A-Za-z]{2,}")
        .unwrap()
});

// +351 then a 9-digit national number; other international numbers are a
// + country code and 6 to 14 further digits in optional groups.
static PHONE_PT_INTL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:\+|00)351[ .\-]?[239]\d{1,2}(?:[ .\-]?\d){6,7}").unwrap());
static PHONE_INTL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\+[1-9]\d{0,2}(?:[ .\-]?\(?\d{1,4}\)?){2,5}").unwrap());
// national: 3-3-3 or 2-3-2-2 grouping, or nine contiguous digits
static PHONE_NATIONAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[239]\d{8}|[239]\d{2}[ .\-]\d{3}[ .\-]\d{3}|[2]\d[ .\-]\d{3}[ .\-]\d{2}[ .\-]\d{2}").unwrap()
});
static IPV4: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}").unwrap());
static IPV6: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[0-9A-Fa-f:.]*:[0-9A-Fa-f.]*:[0-9A-Fa-f:.]*").unwrap());

fn char_before(text: &str, at: usize) -> Option<char> {
    text[..at].chars().next_back()
}

fn char_after(text: &str, at: usize) -> Option<char> {
    text[at..].chars().next()
}

/// True when the number at `start..end` continues into more digits or
/// letters on either side (`"1 912 345 678"`, `"ABC912345678"`).
fn glued_to_number(text: &str, start: usize, end: usize) -> bool {
    let before = char_before(text, start);
    let after = char_after(text, end);
    if before.is_some_and(|c| c.is_alphanumeric() || c == '+' || c == '/')
        || after.is_some_and(|c| c.is_alphanumeric() || c == '/')
    {
        return true;
    }
    // a separator that itself sits between digits: "12.912 345 678", "912 345 678-9"
    let sep = |c: char| matches!(c, '.' | '-' | ',' | ':');
    let digit_beyond_before = before.is_some_and(sep)
        && text[..start - 1].chars().next_back().is_some_and(|c| c.is_ascii_digit());
    let digit_beyond_after = after.is_some_and(sep)
        && text[end + 1..].chars().next().is_some_and(|c| c.is_ascii_digit());
    digit_beyond_before || digit_beyond_after
}

fn is_phone(text: &str, start: usize, end: usize, national: bool) -> bool {
    if glued_to_number(text, start, end) {
        return false;
    }
    let digits: Vec<u8> = text[start..end].bytes().filter(u8::is_ascii_digit).collect();
    if national {
        // amounts written with thousands separators: "300 000 000"
        if digits[3..].iter().all(|&d| d == b'0') {
            return false;
        }
    } else if !(7..=15).contains(&digits.len()) {
        return false;
    }
    true
}

const VERSION_WORDS: &[&str] = &["v", "ver", "versão", "versao", "version", "release", "build"];

fn preceded_by_version_word(text: &str, start: usize) -> bool {
    if char_before(text, start).is_some_and(|c| c == 'v' || c == 'V') {
        return true;
    }
    let head = text[..start].trim_end_matches([' ', '\t']);
    let word: String = head
        .chars()
        .rev()
        .take_while(|c| c.is_alphanumeric())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    VERSION_WORDS.contains(&word.to_lowercase().as_str())
}

/// Addresses that carry no personal-data risk: private, loopback,
/// link-local, documentation, shared, benchmarking, multicast and reserved.
pub fn is_reserved_v4(ip: Ipv4Addr) -> bool {
    let [a, b, c, _] = ip.octets();
    ip.is_private()
        || ip.is_loopback()
        || ip.is_link_local()
        || ip.is_documentation()
        || ip.is_unspecified()
        || ip.is_broadcast()
        || ip.is_multicast()
        || a == 0
        || a >= 240
        || (a == 100 && (64..128).contains(&b))
        || (a == 192 && b == 0 && c == 0)
        || (a == 198 && (b == 18 || b == 19))
}

pub fn is_reserved_v6(ip: Ipv6Addr) -> bool {
    if let Some(v4) = ip.to_ipv4_mapped() {
        return is_reserved_v4(v4);
    }
    let s = ip.segments();
    ip.is_unspecified()
        || ip.is_loopback()
        || ip.is_multicast()
        || (s[0] & 0xffc0) == 0xfe80
        || (s[0] & 0xfe00) == 0xfc00
        || (s[0] == 0x2001 && s[1] == 0x0db8)
}

fn ipv4_candidate(text: &str, start: usize, end: usize) -> bool {
    let cand = &text[start..end];
    if cand.split('.').any(|o| o.len() > 1 && o.starts_with('0')) {
        return false;
    }
    let Ok(ip) = cand.parse::<Ipv4Addr>() else {
        return false;
    };
    let before = char_before(text, start);
    let after = char_after(text, end);
    if before.is_some_and(|c| c.is_alphanumeric() && c != 'v' && c != 'V') || after.is_some_and(|c| c.is_alphanumeric()) {
        return false;
    }
    // part of a longer dotted sequence: "1.2.3.4.5"
    if before == Some('.') || (after == Some('.') && text[end + 1..].starts_with(|c: char| c.is_ascii_digit())) {
        return false;
    }
    !preceded_by_version_word(text, start) && !is_reserved_v4(ip)
}

/// Returns the address span inside an IPv6-looking run, if any.
fn ipv6_span(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let mut s = start;
    let mut e = end;
    // sentence punctuation glued to the address
    while e > s && text[..e].ends_with('.') {
        e -= 1;
    }
    if char_before(text, s).is_some_and(|c| c.is_alphanumeric()) || char_after(text, end).is_some_and(|c| c.is_alphanumeric()) {
        return None;
    }
    // a lone leading colon from "IP:2001:..." style labels is not part of it
    if text[s..e].starts_with(':') && !text[s..e].starts_with("::") {
        s += 1;
    }
    let ip: Ipv6Addr = text[s..e].parse().ok()?;
    (!is_reserved_v6(ip)).then_some((s, e))
}

fn candidates(text: &str) -> Vec<Replacement> {
    let mut out = Vec::new();
    for m in EMAIL.find_iter(text) {
        let after = char_after(text, m.end());
        let before = char_before(text, m.start());
        if after.is_some_and(|c| c.is_alphanumeric() || c == '@') || before == Some('@') {
            continue;
        }
        out.push(Replacement { start: m.start(), end: m.end(), category: PiiCategory::Email });
    }
    for m in IPV4.find_iter(text) {
        if ipv4_candidate(text, m.start(), m.end()) {
            out.push(Replacement { start: m.start(), end: m.end(), category: PiiCategory::Ip });
        }
    }
    for m in IPV6.find_iter(text) {
        if let Some((start, end)) = ipv6_span(text, m.start(), m.end()) {
            out.push(Replacement { start, end, category: PiiCategory::Ip });
        }
    }
    for (re, national) in [(&*PHONE_PT_INTL, false), (&*PHONE_INTL, false), (&*PHONE_NATIONAL, true)] {
        for m in re.find_iter(text) {
            let mut end = m.end();
            // a trailing ')' is only part of the number if it closes a '('
            if text[m.start()..end].ends_with(')') && !text[m.start()..end].contains('(') {
                end -= 1;
            }
            if is_phone(text, m.start(), end, national) {
                out.push(Replacement { start: m.start(), end, category: PiiCategory::Phone });
            }
        }
    }
    out
}

/// Redacts e-mail addresses, phone numbers and public IP literals. Text
/// outside the reported spans is untouched; the spans refer to the input.
pub fn scrub_pii(text: &str) -> (String, RedactionReport) {
    let mut cands = candidates(text);
    // earliest first, then longest, then category priority
    cands.sort_by_key(|r| (r.start, std::cmp::Reverse(r.end), r.category));
    let mut report = RedactionReport::default();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for r in cands {
        if r.start < pos {
            continue;
        }
        out.push_str(&text[pos..r.start]);
        out.push_str(r.category.token());
        pos = r.end;
        match r.category {
            PiiCategory::Email => report.emails += 1,
            PiiCategory::Phone => report.phones += 1,
            PiiCategory::Ip => report.public_ips += 1,
        }
        report.replacements.push(r);
    }
    out.push_str(&text[pos..]);
    (out, report)
}

/// Rebuilds the scrubbed text from the original and a report; used to
/// check that nothing outside the spans changed.
pub fn splice(original: &str, report: &RedactionReport) -> String {
    let mut out = String::new();
    let mut pos = 0;
    for r in &report.replacements {
        out.push_str(&original[pos..r.start]);
        out.push_str(r.category.token());
        pos = r.end;
    }
    out.push_str(&original[pos..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scrub(t: &str) -> String {
        scrub_pii(t).0
    }

    #[test]
    fn examples() {
        let (s, r) = scrub_pii("contacte joao@exemplo.pt");
        assert_eq!(s, "contacte <EMAIL>");
        assert_eq!(r.emails, 1);
        let (s, r) = scrub_pii("ligue +351 912 345 678");
        assert_eq!(s, "ligue <PHONE>");
        assert_eq!(r.phones, 1);
        let (s, r) = scrub_pii("servidor em 8.8.8.8 e router 192.168.0.1");
        assert_eq!(s, "servidor em <IP> e router 192.168.0.1");
        assert_eq!(r.public_ips, 1);
        assert_eq!(r.replacements, vec![Replacement { start: 12, end: 19, category: PiiCategory::Ip }]);
    }

    #[test]
    fn phones() {
        assert_eq!(scrub("tel. 213 456 789."), "tel. <PHONE>.");
        assert_eq!(scrub("tel. 21 345 67 89"), "tel. <PHONE>");
        assert_eq!(scrub("telemóvel 912345678"), "telemóvel <PHONE>");
        assert_eq!(scrub("00351 912 345 678"), "<PHONE>");
        assert_eq!(scrub("+44 20 7946 0958"), "<PHONE>");
        assert_eq!(scrub("custou 300 000 000 euros"), "custou 300 000 000 euros");
        assert_eq!(scrub("NIF 123456789"), "NIF 123456789");
        assert_eq!(scrub("data 2023-12-01"), "data 2023-12-01");
        assert_eq!(scrub("ref 1912345678"), "ref 1912345678");
    }

    #[test]
    fn ips() {
        assert_eq!(scrub("versão 2.4.1.1"), "versão 2.4.1.1");
        assert_eq!(scrub("v1.2.3.4"), "v1.2.3.4");
        assert_eq!(scrub("1.2.3.4.5"), "1.2.3.4.5");
        assert_eq!(scrub("999.1.1.1"), "999.1.1.1");
        assert_eq!(scrub("dns 2001:4860:4860::8888."), "dns <IP>.");
        assert_eq!(scrub("local ::1 e fe80::1"), "local ::1 e fe80::1");
        assert_eq!(scrub("às 12:30:45"), "às 12:30:45");
        assert_eq!(scrub("doc 2001:db8::1"), "doc 2001:db8::1");
    }

    #[test]
    fn idempotent_and_spliceable() {
        let t = "a@b.pt, +351 912 345 678, 8.8.4.4 e 2606:4700::1111; versão 1.0.0.1";
        let (s, r) = scrub_pii(t);
        assert_eq!(splice(t, &r), s);
        assert_eq!(scrub_pii(&s).1.total(), 0);
    }
}
