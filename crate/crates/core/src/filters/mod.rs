//! Document-level keep/drop heuristics.
//!
//! Every filter is a pure function of a document (or URL) and its config.
//! Within the pipeline they run in a fixed order, which matters because a
//! document is attributed to the first filter that drops it:
//! url → language → gopher_repetition → gopher_quality → fineweb_quality.

pub mod fineweb;
pub mod gopher;
pub mod lang;
pub mod url;
pub mod variant;

pub use fineweb::{fineweb_quality, fineweb_stats, FineWebQualityConfig, FineWebStats};
pub use gopher::{
    gopher_quality, gopher_repetition, quality_stats, repetition_stats, GopherQualityConfig,
    GopherRepetitionConfig, QualityStats, RepetitionStats,
};
pub use lang::{
    builtin_profiles, identify_language, language_filter, train_lang_profile, LangGuess, LangProfile,
    LanguageFilterConfig,
};
pub use url::{url_filter, UrlRules};
pub use variant::{variant_score, VariantConfig, VariantLexicon};

/// Stage names in pipeline order.
pub const ORDER: [&str; 5] = [
    url::STAGE,
    lang::STAGE,
    gopher::REPETITION_STAGE,
    gopher::QUALITY_STAGE,
    fineweb::STAGE,
];
