//! The closed set of drop reasons.
//!
//! Every `Drop` verdict carries exactly one of these. The string form
//! (`stage:detail`) is what lands in reports and annotations, so renaming a
//! variant's code is a breaking change for anyone diffing run reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reason {
    // ingest
    IngestNotResponse,
    IngestUnsupportedContent,
    IngestMalformed,
    // embargo
    EmbargoMissingDate,
    EmbargoTooRecent,
    // url
    UrlMalformed,
    UrlBrDomain,
    UrlBlocklist,
    // extract
    ExtractEmpty,
    // language
    LangTooShort,
    LangNotTarget,
    LangLowConfidence,
    // gopher repetition
    GopherRepDupParaFrac,
    GopherRepDupParaCharFrac,
    GopherRepDupLineFrac,
    GopherRepDupLineCharFrac,
    /// Most frequent n-gram character fraction, n in 2..=4.
    GopherRepTopNgram(u8),
    /// Duplicated n-gram character fraction, n in 5..=10.
    GopherRepDupNgram(u8),
    // gopher quality
    GopherQualityWordCount,
    GopherQualityMeanWordLen,
    GopherQualitySymbolRatio,
    GopherQualityBulletLines,
    GopherQualityEllipsisLines,
    GopherQualityAlphaWords,
    GopherQualityStopWords,
    // fineweb quality
    FinewebEmpty,
    FinewebShortLineFrac,
    FinewebLinePunctFrac,
    FinewebCharDupFrac,
    FinewebNewlineRatio,
    // variant
    VariantPtBr,
    // dedup
    DedupNearDuplicate,
    // split
    SplitHigh,
    SplitMedium,
    SplitLow,
    SplitUnscored,
    // post-train
    PosttrainSelfRef,
    PosttrainLowQuality,
    PosttrainBadScore,
    PosttrainDuplicatePrompt,
    PosttrainTooLong,
    PosttrainRepoPopularity,
}

const TOP_NGRAM: [&str; 3] = [
    "gopher_rep:top_2gram_char_frac",
    "gopher_rep:top_3gram_char_frac",
    "gopher_rep:top_4gram_char_frac",
];

const DUP_NGRAM: [&str; 6] = [
    "gopher_rep:dup_5gram_char_frac",
    "gopher_rep:dup_6gram_char_frac",
    "gopher_rep:dup_7gram_char_frac",
    "gopher_rep:dup_8gram_char_frac",
    "gopher_rep:dup_9gram_char_frac",
    "gopher_rep:dup_10gram_char_frac",
];

impl Reason {
    /// Every reason code, in declaration order.
    pub fn all() -> Vec<Reason> {
        use Reason::*;
        let mut v = vec![
            IngestNotResponse,
            IngestUnsupportedContent,
            IngestMalformed,
            EmbargoMissingDate,
            EmbargoTooRecent,
            UrlMalformed,
            UrlBrDomain,
            UrlBlocklist,
            ExtractEmpty,
            LangTooShort,
            LangNotTarget,
            LangLowConfidence,
            GopherRepDupParaFrac,
            GopherRepDupParaCharFrac,
            GopherRepDupLineFrac,
            GopherRepDupLineCharFrac,
        ];
        v.extend((2..=4).map(GopherRepTopNgram));
        v.extend((5..=10).map(GopherRepDupNgram));
        v.extend([
            GopherQualityWordCount,
            GopherQualityMeanWordLen,
            GopherQualitySymbolRatio,
            GopherQualityBulletLines,
            GopherQualityEllipsisLines,
            GopherQualityAlphaWords,
            GopherQualityStopWords,
            FinewebEmpty,
            FinewebShortLineFrac,
            FinewebLinePunctFrac,
            FinewebCharDupFrac,
            FinewebNewlineRatio,
            VariantPtBr,
            DedupNearDuplicate,
            SplitHigh,
            SplitMedium,
            SplitLow,
            SplitUnscored,
            PosttrainSelfRef,
            PosttrainLowQuality,
            PosttrainBadScore,
            PosttrainDuplicatePrompt,
            PosttrainTooLong,
            PosttrainRepoPopularity,
        ]);
        v
    }

    /// Name of the stage that emits this reason, as it appears in reports.
    pub fn stage(self) -> &'static str {
        match self.code().split_once(':').map_or("", |(p, _)| p) {
            "lang" => "language",
            "gopher_rep" => "gopher_repetition",
            "fineweb" => "fineweb_quality",
            other => other,
        }
    }

    pub fn code(self) -> &'static str {
        use Reason::*;
        match self {
            IngestNotResponse => "ingest:not_response",
            IngestUnsupportedContent => "ingest:unsupported_content",
            IngestMalformed => "ingest:malformed",
            EmbargoMissingDate => "embargo:missing_date",
            EmbargoTooRecent => "embargo:too_recent",
            UrlMalformed => "url:malformed",
            UrlBrDomain => "url:br_domain",
            UrlBlocklist => "url:blocklist",
            ExtractEmpty => "extract:empty",
            LangTooShort => "lang:too_short",
            LangNotTarget => "lang:not_target",
            LangLowConfidence => "lang:low_confidence",
            GopherRepDupParaFrac => "gopher_rep:dup_para_frac",
            GopherRepDupParaCharFrac => "gopher_rep:dup_para_char_frac",
            GopherRepDupLineFrac => "gopher_rep:dup_line_frac",
            GopherRepDupLineCharFrac => "gopher_rep:dup_line_char_frac",
            GopherRepTopNgram(n) => {
                assert!((2..=4).contains(&n), "top n-gram order {n} out of range");
                TOP_NGRAM[n as usize - 2]
            }
            GopherRepDupNgram(n) => {
                assert!((5..=10).contains(&n), "dup n-gram order {n} out of range");
                DUP_NGRAM[n as usize - 5]
            }
            GopherQualityWordCount => "gopher_quality:word_count",
            GopherQualityMeanWordLen => "gopher_quality:mean_word_len",
            GopherQualitySymbolRatio => "gopher_quality:symbol_ratio",
            GopherQualityBulletLines => "gopher_quality:bullet_lines",
            GopherQualityEllipsisLines => "gopher_quality:ellipsis_lines",
            GopherQualityAlphaWords => "gopher_quality:alpha_words",
            GopherQualityStopWords => "gopher_quality:stop_words",
            FinewebEmpty => "fineweb:empty",
            FinewebShortLineFrac => "fineweb:short_line_frac",
            FinewebLinePunctFrac => "fineweb:line_punct_frac",
            FinewebCharDupFrac => "fineweb:char_dup_frac",
            FinewebNewlineRatio => "fineweb:newline_ratio",
            VariantPtBr => "variant:pt_br",
            DedupNearDuplicate => "dedup:near_duplicate",
            SplitHigh => "split:high",
            SplitMedium => "split:medium",
            SplitLow => "split:low",
            SplitUnscored => "split:unscored",
            PosttrainSelfRef => "posttrain:self_ref",
            PosttrainLowQuality => "posttrain:low_quality",
            PosttrainBadScore => "posttrain:bad_score",
            PosttrainDuplicatePrompt => "posttrain:duplicate_prompt",
            PosttrainTooLong => "posttrain:too_long",
            PosttrainRepoPopularity => "posttrain:repo_popularity",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownReason(pub String);

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown reason code `{}`", self.0)
    }
}

impl std::error::Error for UnknownReason {}

impl FromStr for Reason {
    type Err = UnknownReason;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Reason::all()
            .into_iter()
            .find(|r| r.code() == s)
            .ok_or_else(|| UnknownReason(s.to_string()))
    }
}

impl Serialize for Reason {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Reason {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn codes_are_unique_and_round_trip() {
        let all = Reason::all();
        let codes: HashSet<_> = all.iter().map(|r| r.code()).collect();
        assert_eq!(codes.len(), all.len());
        for r in all {
            assert_eq!(r.code().parse::<Reason>().unwrap(), r);
            let (stage, detail) = r.code().split_once(':').unwrap();
            assert!(!stage.is_empty() && !detail.is_empty());
        }
    }

    #[test]
    fn stage_names_match_stage_constants() {
        assert_eq!(Reason::LangNotTarget.stage(), crate::filters::lang::STAGE);
        assert_eq!(Reason::GopherRepTopNgram(3).stage(), crate::filters::gopher::REPETITION_STAGE);
        assert_eq!(Reason::GopherQualityStopWords.stage(), crate::filters::gopher::QUALITY_STAGE);
        assert_eq!(Reason::FinewebEmpty.stage(), crate::filters::fineweb::STAGE);
        assert_eq!(Reason::DedupNearDuplicate.stage(), crate::dedup::STAGE);
        assert_eq!(Reason::EmbargoTooRecent.stage(), crate::ingest::EMBARGO_STAGE);
    }

    #[test]
    fn unknown_code_rejected() {
        assert!("url:nope".parse::<Reason>().is_err());
    }
}
