//! Host-based URL rules: blocked top-level suffixes and a hostname blocklist.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Reason, Verdict};

pub const STAGE: &str = "url";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UrlRules {
    /// Host suffixes to reject, each starting with `.`.
    pub blocked_tlds: BTreeSet<String>,
    /// Lowercase hostnames; an entry also blocks every subdomain of it.
    pub blocklist: BTreeSet<String>,
}

impl Default for UrlRules {
    fn default() -> Self {
        UrlRules {
            blocked_tlds: BTreeSet::from([".br".to_string()]),
            blocklist: BTreeSet::new(),
        }
    }
}

impl UrlRules {
    pub fn validate(&self) -> Result<()> {
        for s in &self.blocked_tlds {
            if !s.starts_with('.') || s.len() < 2 {
                return Err(Error::config(format!("blocked suffix `{s}` must start with `.`")));
            }
        }
        Ok(())
    }

    /// Parses a blocklist file body: one hostname or suffix per line, `#`
    /// starts a comment, blank lines ignored. A leading `.` or `*.` is
    /// accepted and stripped since entries always cover subdomains.
    pub fn parse_blocklist(body: &str) -> BTreeSet<String> {
        body.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.trim_start_matches("*.")
                    .trim_start_matches('.')
                    .trim_end_matches('.')
                    .to_ascii_lowercase()
            })
            .filter(|l| !l.is_empty())
            .collect()
    }

    pub fn load_blocklist(&mut self, path: &Path) -> Result<()> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        self.blocklist.extend(Self::parse_blocklist(&body));
        Ok(())
    }

    fn blocks_host(&self, host: &str) -> bool {
        // walk "a.b.c", "b.c", "c"
        let mut rest = host;
        loop {
            if self.blocklist.contains(rest) {
                return true;
            }
            match rest.split_once('.') {
                Some((_, tail)) => rest = tail,
                None => return false,
            }
        }
    }
}

/// Lowercased hostname of `url`, without a trailing dot. Accepts bare
/// `host/path` strings by assuming `http://`.
pub fn hostname(url: &str) -> Option<String> {
    let parsed = match url::Url::parse(url.trim()) {
        Ok(u) => u,
        Err(url::ParseError::RelativeUrlWithoutBase) => url::Url::parse(&format!("http://{}", url.trim())).ok()?,
        Err(_) => return None,
    };
    let host = parsed.host_str()?.trim_end_matches('.').to_ascii_lowercase();
    (!host.is_empty()).then_some(host)
}

pub fn url_filter(url: &str, rules: &UrlRules) -> Verdict {
    let Some(host) = hostname(url) else {
        return Verdict::drop(STAGE, Reason::UrlMalformed);
    };
    if rules.blocked_tlds.iter().any(|s| host.ends_with(&s.to_ascii_lowercase())) {
        return Verdict::drop(STAGE, Reason::UrlBrDomain);
    }
    if rules.blocks_host(&host) {
        return Verdict::drop(STAGE, Reason::UrlBlocklist);
    }
    Verdict::keep(STAGE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_rules() {
        let r = UrlRules::default();
        assert_eq!(url_filter("https://exemplo.com.br/noticia", &r).reason(), Some(Reason::UrlBrDomain));
        assert_eq!(url_filter("HTTP://EXEMPLO.BR.", &r).reason(), Some(Reason::UrlBrDomain));
        assert!(url_filter("https://arquivo.pt/page", &r).is_keep());
        assert!(url_filter("https://brasil.example.pt/", &r).is_keep());
        assert!(url_filter("https://example.brx/", &r).is_keep());
    }

    #[test]
    fn malformed() {
        let r = UrlRules::default();
        for bad in ["", "http://", "mailto:a@b.pt", "http://[::1"] {
            assert_eq!(url_filter(bad, &r).reason(), Some(Reason::UrlMalformed), "{bad:?}");
        }
        assert!(url_filter("publico.pt/artigo", &r).is_keep());
    }

    #[test]
    fn blocklist_file() {
        let mut r = UrlRules::default();
        r.blocklist = UrlRules::parse_blocklist("# nsfw\nmau.example\n\n*.pior.example # wildcard\n");
        assert_eq!(r.blocklist.len(), 2);
        assert_eq!(url_filter("https://mau.example/x", &r).reason(), Some(Reason::UrlBlocklist));
        assert_eq!(url_filter("https://a.b.pior.example/", &r).reason(), Some(Reason::UrlBlocklist));
        assert!(url_filter("https://naomau.example/", &r).is_keep());
    }

    #[test]
    fn suffix_validation() {
        let r = UrlRules { blocked_tlds: BTreeSet::from(["br".into()]), ..UrlRules::default() };
        assert!(matches!(r.validate(), Err(Error::Config(_))));
    }
}
