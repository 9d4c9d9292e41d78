use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters whose UTF-8 bytes are commonly misread as Latin-1 or
/// Windows-1252 in Portuguese pages. `Ã` and `Â` are left out on purpose:
/// they start every damaged key, so repairing to them would let a second
/// pass find new damage. The same goes for `«`, `»`, `°`, `º` and `ª`,
/// which are themselves the second half of a damaged key (`Â«`, `Ãº`, ...).
const REPAIRABLE: &str = "áàâãéêíóôõúüçÁÀÉÊÍÓÔÕÚÇ";

/// Damaged text → repaired text, applied in one left-to-right pass with
/// longest-match priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MojibakeTable {
    entries: BTreeMap<String, String>,
    #[serde(skip)]
    by_first: HashMap<char, Vec<(String, String)>>,
}

fn misdecode(c: char) -> Vec<String> {
    let mut buf = [0u8; 4];
    let bytes = c.encode_utf8(&mut buf).as_bytes();
    let latin1: String = bytes.iter().map(|&b| b as char).collect();
    let (cp1252, _, _) = encoding_rs::WINDOWS_1252.decode(bytes);
    let mut out = vec![latin1];
    if cp1252 != out[0] {
        out.push(cp1252.into_owned());
    }
    out
}

impl Default for MojibakeTable {
    fn default() -> Self {
        let entries = REPAIRABLE
            .chars()
            .flat_map(|c| misdecode(c).into_iter().map(move |k| (k, c.to_string())))
            .collect();
        MojibakeTable::new(entries).expect("default table is acyclic")
    }
}

impl MojibakeTable {
    /// Validates that no replacement character occurs in any key, which
    /// rules out rewrite cycles and makes a single pass idempotent.
    pub fn new(entries: BTreeMap<String, String>) -> Result<Self> {
        for (k, v) in &entries {
            if k.is_empty() || v.is_empty() {
                return Err(Error::config(format!("mojibake entry `{k}` → `{v}` has an empty side")));
            }
        }
        for v in entries.values() {
            for (k, _) in &entries {
                if let Some(c) = v.chars().find(|c| k.contains(*c)) {
                    return Err(Error::config(format!(
                        "mojibake replacement `{v}` contains `{c}`, which occurs in key `{k}`"
                    )));
                }
            }
        }
        let mut by_first: HashMap<char, Vec<(String, String)>> = HashMap::new();
        for (k, v) in &entries {
            by_first.entry(k.chars().next().unwrap()).or_default().push((k.clone(), v.clone()));
        }
        for list in by_first.values_mut() {
            list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        Ok(MojibakeTable { entries, by_first })
    }

    /// Tab-separated `damaged<TAB>repaired` lines. Blank lines and lines
    /// starting with `#` are skipped; keys are taken verbatim (they may
    /// contain spaces or no-break spaces).
    pub fn parse(body: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('\t') else {
                return Err(Error::config(format!("mojibake table line {}: missing tab", i + 1)));
            };
            entries.insert(k.to_string(), v.to_string());
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::parse(&body)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    fn index(&self) -> std::borrow::Cow<'_, HashMap<char, Vec<(String, String)>>> {
        if self.by_first.is_empty() && !self.entries.is_empty() {
            // deserialized without the index
            std::borrow::Cow::Owned(Self::new(self.entries.clone()).map(|t| t.by_first).unwrap_or_default())
        } else {
            std::borrow::Cow::Borrowed(&self.by_first)
        }
    }
}

pub fn fix_encoding(text: &str, table: &MojibakeTable) -> String {
    let index = table.index();
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        let hit = index
            .get(&c)
            .and_then(|cands| cands.iter().find(|(k, _)| rest.starts_with(k.as_str())));
        match hit {
            Some((k, v)) => {
                out.push_str(v);
                rest = &rest[k.len()..];
            }
            None => {
                out.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn repairs_latin1_misreads() {
        let t = MojibakeTable::default();
        // oracle: encode as UTF-8, reinterpret each byte as a Latin-1 char
        let damaged: String = "São João".bytes().map(|b| b as char).collect();
        assert_eq!(damaged, "SÃ£o JoÃ£o");
        assert_eq!(fix_encoding(&damaged, &t), "São João");
        assert_eq!(fix_encoding("São João", &t), "São João");
        assert_eq!(fix_encoding("Ã\u{a0}s vezes", &t), "às vezes");
        for (k, v) in [("Ã¡", "á"), ("Ã©", "é"), ("Ã§", "ç"), ("Ãµ", "õ"), ("Ã³", "ó"), ("Ãº", "ú"), ("Ãª", "ê")] {
            assert_eq!(t.entries()[k], v);
        }
    }

    #[test]
    fn rejects_cycles() {
        let mut e = BTreeMap::new();
        e.insert("ab".to_string(), "b".to_string());
        assert!(MojibakeTable::new(e).is_err());
        assert!(MojibakeTable::parse("Ã©\té\n# comment\n").is_ok());
        assert!(MojibakeTable::parse("no tab\n").is_err());
    }

    proptest! {
        #[test]
        fn idempotent(parts in proptest::collection::vec(
            prop_oneof![Just("Ã".to_string()), Just("£".to_string()), Just("Â".to_string()),
                        Just("©".to_string()), Just("\u{a0}".to_string()), "[a-zçã ]{0,5}"], 0..20)) {
            let t = MojibakeTable::default();
            let once = fix_encoding(&parts.concat(), &t);
            prop_assert_eq!(fix_encoding(&once, &t), once);
        }
    }
}
