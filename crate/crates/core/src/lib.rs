//! Streaming curation of web-archive captures into pretraining splits, and
//! preparation of post-training (SFT) data mixtures.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`model`]: documents, verdicts, per-stage accounting, token counting.
//! * [`ingest`]: WARC parsing, record to document mapping, capture embargo.
//! * [`extract`]: HTML main-text extraction and line cleanup.
//! * [`filters`]: URL rules, language identification, Gopher repetition and
//!   quality, FineWeb-style quality, pt-PT/pt-BR variant scoring.
//! * [`pii`]: e-mail, phone and public IP redaction; mojibake repair.
//! * [`dedup`]: shingling, MinHash, LSH banding, duplicate clusters.
//! * [`split`]: quality-score bucketing into high/medium/low splits.
//! * [`posttrain`]: SFT entry rules and token-proportional mixtures.
//! * [`pipeline`]: config-driven, sharded, resumable orchestration.
//!
//! ```
//! use corpus_forge::filters::{url_filter, UrlRules};
//!
//! let rules = UrlRules::default();
//! let v = url_filter("https://exemplo.com.br/noticia", &rules);
//! assert_eq!(v.reason_code(), "url:br_domain");
//! assert!(url_filter("https://arquivo.pt/page", &rules).is_keep());
//! ```

pub mod dedup;
pub mod error;
pub mod extract;
pub mod filters;
pub mod ingest;
pub mod io;
pub mod model;
pub mod pii;
pub mod pipeline;
pub mod posttrain;
pub mod split;
pub(crate) mod text;

pub use error::{Error, Result};
pub use model::{count_tokens, merge_stats, Document, Reason, StageStats, TokenizerSpec, Verdict};

// The guide under book/ is compiled into doctests so its snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/warc.md")]
    mod warc {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/filters.md")]
    mod filters {}
    #[doc = include_str!("../../../book/src/language-id.md")]
    mod language_id {}
    #[doc = include_str!("../../../book/src/pii.md")]
    mod pii {}
    #[doc = include_str!("../../../book/src/minhash.md")]
    mod minhash {}
    #[doc = include_str!("../../../book/src/splits.md")]
    mod splits {}
    #[doc = include_str!("../../../book/src/posttrain.md")]
    mod posttrain {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
