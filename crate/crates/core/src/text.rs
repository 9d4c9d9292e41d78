//! Text normalisation helpers shared by the filter statistics, shingling and
//! post-train keys.

use std::borrow::Cow;

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

/// NFC form, borrowing when the input is already normalised.
pub fn nfc(text: &str) -> Cow<'_, str> {
    match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => Cow::Borrowed(text),
        _ => Cow::Owned(text.nfc().collect()),
    }
}

/// Whitespace runs collapsed to one space, ends trimmed.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Strips leading and trailing characters that are neither letters nor
/// digits, then lowercases: `"Lisboa,"` -> `"lisboa"`.
pub fn bare_lower(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nfc_composes() {
        let decomposed = "Sa\u{0303}o";
        assert_eq!(nfc(decomposed), "São");
        assert!(matches!(nfc("São"), Cow::Borrowed(_)));
    }

    #[test]
    fn collapse() {
        assert_eq!(collapse_whitespace("  a \t b\n\nc  "), "a b c");
        assert_eq!(collapse_whitespace("   "), "");
    }

    #[test]
    fn bare_lower_strips_punctuation() {
        assert_eq!(bare_lower("«Não»,"), "não");
        assert_eq!(bare_lower("..."), "");
    }
}
