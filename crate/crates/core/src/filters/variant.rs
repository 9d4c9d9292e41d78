//! European vs Brazilian Portuguese lexical marker score.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Reason, Verdict};
use crate::text::nfc;

pub const STAGE: &str = "variant";

/// `(pt-PT, pt-BR)` marker pairs shipped by default.
const DEFAULT_PAIRS: &[(&str, &str)] = &[
    ("comboio", "trem"),
    ("comboios", "trens"),
    ("autocarro", "ônibus"),
    ("autocarros", "ônibus"),
    ("pequeno-almoço", "café da manhã"),
    ("telemóvel", "celular"),
    ("telemóveis", "celulares"),
    ("ecrã", "tela"),
    ("rato", "mouse"),
    ("frigorífico", "geladeira"),
    ("casa de banho", "banheiro"),
    ("sumo", "suco"),
    ("camisola", "camiseta"),
    ("peão", "pedestre"),
    ("passadeira", "faixa de pedestres"),
    ("bilhete", "passagem"),
    ("equipa", "equipe"),
    ("utilizador", "usuário"),
    ("utilizadores", "usuários"),
    ("registo", "registro"),
    ("guarda-redes", "goleiro"),
    ("relva", "grama"),
    ("rapariga", "moça"),
    ("miúdo", "garoto"),
    ("talho", "açougue"),
    ("portagem", "pedágio"),
    ("travão", "freio"),
    ("autoestrada", "rodovia"),
    ("gelado", "sorvete"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantLexicon {
    pairs: Vec<(String, String)>,
    #[serde(skip)]
    compiled: Vec<(Vec<String>, Vec<String>)>,
}

impl Default for VariantLexicon {
    fn default() -> Self {
        VariantLexicon::new(DEFAULT_PAIRS.iter().map(|(a, b)| (a.to_string(), b.to_string())))
            .expect("default lexicon is valid")
    }
}

impl VariantLexicon {
    pub fn new<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Result<Self> {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(a, b)| (a.trim().to_lowercase(), b.trim().to_lowercase()))
            .collect();
        let mut compiled = Vec::with_capacity(pairs.len());
        for (pt, br) in &pairs {
            let (tp, tb) = (words(pt), words(br));
            if tp.is_empty() || tb.is_empty() {
                return Err(Error::config(format!("variant pair `{pt}`/`{br}` has an empty side")));
            }
            if tp == tb {
                return Err(Error::config(format!("variant pair `{pt}`/`{br}` has identical sides")));
            }
            compiled.push((tp, tb));
        }
        Ok(VariantLexicon { pairs, compiled })
    }

    /// Tab-separated `pt_pt<TAB>pt_br` lines; `#` comments and blank lines
    /// are skipped.
    pub fn parse(body: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in body.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((a, b)) = line.split_once('\t') else {
                return Err(Error::config(format!("variant lexicon line {}: expected two tab-separated terms", i + 1)));
            };
            pairs.push((a.to_string(), b.to_string()));
        }
        Self::new(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::parse(&body)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// The same lexicon with every pair's sides exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.pairs.iter().map(|(a, b)| (b.clone(), a.clone()))).expect("swap preserves validity")
    }

    fn compiled(&self) -> std::borrow::Cow<'_, [(Vec<String>, Vec<String>)]> {
        // deserialized lexicons arrive without the compiled form
        if self.compiled.len() == self.pairs.len() {
            std::borrow::Cow::Borrowed(&self.compiled)
        } else {
            std::borrow::Cow::Owned(self.pairs.iter().map(|(a, b)| (words(a), words(b))).collect())
        }
    }
}

/// Lowercase word tokens: runs of alphanumerics, with inner hyphens kept
/// so that `pequeno-almoço` is one word.
fn words(text: &str) -> Vec<String> {
    nfc(text)
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|w| w.trim_matches('-'))
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn occurrences(hay: &[String], needle: &[String]) -> usize {
    if needle.len() > hay.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

/// Marker hit counts `(pt_pt, pt_br)` over whole-word, case-folded matches.
pub fn variant_hits(text: &str, lex: &VariantLexicon) -> (usize, usize) {
    let tokens = words(text);
    lex.compiled().iter().fold((0, 0), |(pt, br), (a, b)| {
        (pt + occurrences(&tokens, a), br + occurrences(&tokens, b))
    })
}

/// `(pt − br) / max(1, pt + br)`: +1 for purely European markers, −1 for
/// purely Brazilian ones, 0 when no marker occurs.
pub fn variant_score(text: &str, lex: &VariantLexicon) -> f64 {
    let (pt, br) = variant_hits(text, lex);
    (pt as f64 - br as f64) / (pt + br).max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct VariantConfig {
    /// TSV lexicon; the built-in pairs are used when unset.
    pub lexicon: Option<std::path::PathBuf>,
    /// Drop documents scoring strictly below this. Off by default: the
    /// score is only recorded as an annotation.
    pub drop_below: Option<f64>,
}

impl VariantConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.drop_below {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::config(format!("variant.drop_below = {t} is outside [-1, 1]")));
            }
        }
        Ok(())
    }

    pub fn load_lexicon(&self) -> Result<VariantLexicon> {
        match &self.lexicon {
            Some(p) => VariantLexicon::load(p),
            None => Ok(VariantLexicon::default()),
        }
    }
}

/// Annotates `doc` with its score and applies the optional drop threshold.
pub fn variant_filter(doc: &mut Document, lex: &VariantLexicon, cfg: &VariantConfig) -> Verdict {
    let score = variant_score(&doc.text, lex);
    doc.annotate(STAGE, format!("{score:.4}"));
    match cfg.drop_below {
        Some(t) if score < t => Verdict::drop(STAGE, Reason::VariantPtBr),
        _ => Verdict::keep(STAGE),
    }
}
