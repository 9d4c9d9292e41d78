use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    #[default]
    Whitespace,
    Vocabulary,
}

/// How tokens are counted for every token figure in a run.
///
/// `Vocabulary` segments each whitespace-delimited run greedily by longest
/// vocabulary match; characters not covered by any entry count one each.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub kind: TokenizerKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocabulary: Vec<String>,
}

impl TokenizerSpec {
    pub fn whitespace() -> Self {
        TokenizerSpec::default()
    }

    pub fn vocabulary<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenizerSpec {
            kind: TokenizerKind::Vocabulary,
            vocabulary: entries.into_iter().map(Into::into).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == TokenizerKind::Vocabulary && self.vocabulary.iter().all(|v| v.is_empty()) {
            return Err(Error::config("vocabulary tokenizer requires a non-empty vocabulary"));
        }
        Ok(())
    }
}

/// A compiled [`TokenizerSpec`]. Build once, count many.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Option<Vocab>,
}

#[derive(Debug, Clone)]
struct Vocab {
    entries: HashSet<String>,
    max_chars: usize,
}

impl Tokenizer {
    pub fn new(spec: &TokenizerSpec) -> Result<Self> {
        spec.validate()?;
        let vocab = match spec.kind {
            TokenizerKind::Whitespace => None,
            TokenizerKind::Vocabulary => {
                let entries: HashSet<String> =
                    spec.vocabulary.iter().filter(|v| !v.is_empty()).cloned().collect();
                let max_chars = entries.iter().map(|e| e.chars().count()).max().unwrap_or(1);
                Some(Vocab { entries, max_chars })
            }
        };
        Ok(Tokenizer { vocab })
    }

    pub fn count(&self, text: &str) -> u64 {
        match &self.vocab {
            None => text.split_whitespace().count() as u64,
            Some(v) => text.split_whitespace().map(|run| v.count_run(run)).sum(),
        }
    }
}

impl Vocab {
    fn count_run(&self, run: &str) -> u64 {
        // char boundary offsets, plus the end
        let bounds: Vec<usize> = run
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(run.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        let mut pos = 0;
        let mut count = 0;
        while pos < n_chars {
            let longest = (1..=self.max_chars.min(n_chars - pos))
                .rev()
                .find(|&len| self.entries.contains(&run[bounds[pos]..bounds[pos + len]]))
                .unwrap_or(1);
            pos += longest;
            count += 1;
        }
        count
    }
}

/// One-shot convenience over [`Tokenizer`].
pub fn count_tokens(text: &str, spec: &TokenizerSpec) -> Result<u64> {
    Ok(Tokenizer::new(spec)?.count(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn whitespace_examples() {
        let ws = TokenizerSpec::whitespace();
        assert_eq!(count_tokens("", &ws).unwrap(), 0);
        assert_eq!(count_tokens("o comboio chegou", &ws).unwrap(), 3);
        assert_eq!(count_tokens("  a\t\nb  ", &ws).unwrap(), 2);
    }

    #[test]
    fn greedy_longest_match() {
        // a-b-a-b: "ab" matches twice, beating four single characters
        let spec = TokenizerSpec::vocabulary(["ab", "a", "b"]);
        assert_eq!(count_tokens("abab", &spec).unwrap(), 2);
        // unknown characters count one each: "ab" + "x" + "ab"
        assert_eq!(count_tokens("abxab", &spec).unwrap(), 3);
        // greedy, not optimal: "abc" then "d" (2), never "ab"+"cd"
        let spec = TokenizerSpec::vocabulary(["abc", "ab", "cd"]);
        assert_eq!(count_tokens("abcd", &spec).unwrap(), 2);
    }

    #[test]
    fn multibyte_vocabulary() {
        let spec = TokenizerSpec::vocabulary(["ção", "es", "ta"]);
        // es-ta-ção
        assert_eq!(count_tokens("estação", &spec).unwrap(), 3);
    }

    #[test]
    fn empty_vocabulary_is_config_error() {
        let spec = TokenizerSpec {
            kind: TokenizerKind::Vocabulary,
            vocabulary: vec![],
        };
        assert!(matches!(count_tokens("x", &spec), Err(Error::Config(_))));
    }

    #[test]
    fn whitespace_kind_ignores_vocabulary() {
        let spec = TokenizerSpec {
            kind: TokenizerKind::Whitespace,
            vocabulary: vec!["a".into()],
        };
        assert_eq!(count_tokens("aaa bbb", &spec).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn whitespace_count_is_additive(a in "[a-zà-ú0-9]{1,12}", b in "[a-zà-ú0-9]{1,12}") {
            let ws = TokenizerSpec::whitespace();
            let joined = format!("{a} {b}");
            prop_assert_eq!(
                count_tokens(&joined, &ws).unwrap(),
                count_tokens(&a, &ws).unwrap() + count_tokens(&b, &ws).unwrap()
            );
        }

        #[test]
        fn vocabulary_count_bounded_by_chars(text in "[ab x]{0,40}") {
            let spec = TokenizerSpec::vocabulary(["ab", "a", "bb"]);
            let n = count_tokens(&text, &spec).unwrap();
            let non_ws = text.chars().filter(|c| !c.is_whitespace()).count() as u64;
            prop_assert!(n <= non_ws);
            prop_assert_eq!(n, count_tokens(&text, &spec).unwrap());
        }
    }
}
