//! Per-document stages with their lookup tables loaded, ready to run.

use crate::error::Result;
use crate::extract::{clean_lines, extract_main_text, ExtractionConfig};
use crate::filters::gopher::{gopher_quality, gopher_repetition};
use crate::filters::lang::{language_filter, LangProfile};
use crate::filters::variant::variant_filter;
use crate::filters::{fineweb_quality, url_filter, FineWebQualityConfig, GopherQualityConfig, GopherRepetitionConfig, LanguageFilterConfig, UrlRules, VariantConfig, VariantLexicon};
use crate::ingest::{embargo_filter, EmbargoPolicy, KIND_HTML, STAGE as INGEST_STAGE};
use crate::model::{Document, Reason, Verdict};
use crate::pii::{fix_encoding, scrub_pii, MojibakeTable};

use super::config::{StageKind, StageSettings};

pub(crate) enum DocStage {
    Embargo(EmbargoPolicy),
    Url(UrlRules),
    Extract(ExtractionConfig),
    Language(Vec<LangProfile>, LanguageFilterConfig),
    GopherRepetition(GopherRepetitionConfig),
    GopherQuality(GopherQualityConfig),
    FinewebQuality(FineWebQualityConfig),
    Variant(VariantLexicon, VariantConfig),
    Pii(Option<MojibakeTable>),
}

impl DocStage {
    /// Loads whatever the stage needs from disk. `None` for ingest and the
    /// global stages.
    pub(crate) fn prepare(s: &StageSettings) -> Result<Option<DocStage>> {
        Ok(Some(match s {
            StageSettings::Ingest | StageSettings::Dedup(_) | StageSettings::Split(_) => return Ok(None),
            StageSettings::Embargo(p) => DocStage::Embargo(*p),
            StageSettings::Url(c) => DocStage::Url(c.rules.clone()),
            StageSettings::Extract(c) => DocStage::Extract(c.clone()),
            StageSettings::Language(c) => DocStage::Language(c.load_profiles()?, c.clone()),
            StageSettings::GopherRepetition(c) => DocStage::GopherRepetition(c.clone()),
            StageSettings::GopherQuality(c) => DocStage::GopherQuality(c.clone()),
            StageSettings::FinewebQuality(c) => DocStage::FinewebQuality(c.clone()),
            StageSettings::Variant(c) => DocStage::Variant(c.load_lexicon()?, c.clone()),
            StageSettings::Pii(c) => DocStage::Pii(match (&c.mojibake_table, c.fix_encoding) {
                (_, false) => None,
                (Some(p), true) => Some(MojibakeTable::load(p)?),
                (None, true) => Some(MojibakeTable::default()),
            }),
        }))
    }

    pub(crate) fn kind(&self) -> StageKind {
        match self {
            DocStage::Embargo(_) => StageKind::Embargo,
            DocStage::Url(_) => StageKind::Url,
            DocStage::Extract(_) => StageKind::Extract,
            DocStage::Language(..) => StageKind::Language,
            DocStage::GopherRepetition(_) => StageKind::GopherRepetition,
            DocStage::GopherQuality(_) => StageKind::GopherQuality,
            DocStage::FinewebQuality(_) => StageKind::FinewebQuality,
            DocStage::Variant(..) => StageKind::Variant,
            DocStage::Pii(_) => StageKind::Pii,
        }
    }

    /// Whether the stage may rewrite `text` (and so change its token count).
    pub(crate) fn rewrites(&self) -> bool {
        matches!(self, DocStage::Extract(_) | DocStage::Pii(_))
    }

    pub(crate) fn apply(&self, doc: &mut Document) -> Result<Verdict> {
        let stage = self.kind().name();
        Ok(match self {
            DocStage::Embargo(p) => embargo_filter(doc, p),
            // documents from non-web sources have no URL to judge
            DocStage::Url(rules) => match &doc.source_url {
                Some(u) => url_filter(u, rules),
                None => Verdict::keep(stage),
            },
            DocStage::Extract(cfg) => {
                let is_html = doc.annotations.get(INGEST_STAGE).is_some_and(|k| k == KIND_HTML);
                let text = if is_html { extract_main_text(&doc.text, cfg) } else { doc.text.clone() };
                doc.text = clean_lines(&text, cfg);
                if doc.text.trim().is_empty() {
                    Verdict::drop(stage, Reason::ExtractEmpty)
                } else {
                    doc.annotate(stage, if is_html { "main_text" } else { "lines" });
                    Verdict::keep(stage)
                }
            }
            DocStage::Language(profiles, cfg) => language_filter(doc, profiles, cfg)?,
            DocStage::GopherRepetition(cfg) => gopher_repetition(doc, cfg),
            DocStage::GopherQuality(cfg) => gopher_quality(doc, cfg),
            DocStage::FinewebQuality(cfg) => fineweb_quality(doc, cfg),
            DocStage::Variant(lex, cfg) => variant_filter(doc, lex, cfg),
            DocStage::Pii(table) => {
                if let Some(t) = table {
                    doc.text = fix_encoding(&doc.text, t);
                }
                let (scrubbed, report) = scrub_pii(&doc.text);
                doc.text = scrubbed;
                doc.annotate(
                    stage,
                    format!("email={} phone={} ip={}", report.emails, report.phones, report.public_ips),
                );
                Verdict::keep(stage)
            }
        })
    }
}
