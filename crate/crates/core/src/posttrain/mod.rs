//! Post-training (SFT) data: entry transforms, entry filters and
//! token-proportional mixtures.

mod adapter;
mod mixture;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};
use crate::model::{Reason, Tokenizer, Verdict};
use crate::text::{collapse_whitespace, nfc};

pub use adapter::FieldMap;
pub use mixture::{compose_mixture, compose_mixture_from, MixtureReport, MixtureSource, MixtureSpec, SourceReport};

pub const STAGE: &str = "posttrain";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message { role, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftEntry {
    pub id: String,
    pub source: String,
    pub messages: Vec<Message>,
    #[serde(rename = "lang", default)]
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    #[serde(rename = "tokens", default)]
    pub token_count: u64,
}

impl SftEntry {
    /// Roles alternate user/assistant after an optional system head and
    /// every message has content.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::data("SFT entry without id"));
        }
        let body = match self.messages.first() {
            Some(m) if m.role == Role::System => &self.messages[1..],
            _ => &self.messages[..],
        };
        if body.is_empty() {
            return Err(Error::data(format!("entry {}: no user/assistant messages", self.id)));
        }
        for (i, m) in body.iter().enumerate() {
            let want = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if m.role != want {
                return Err(Error::data(format!("entry {}: message {} should be {:?}", self.id, i, want)));
            }
        }
        if let Some(m) = self.messages.iter().find(|m| m.content.trim().is_empty()) {
            return Err(Error::data(format!("entry {}: empty {:?} message", self.id, m.role)));
        }
        Ok(())
    }

    /// Token count of all message contents under `tok`.
    pub fn count_tokens(&self, tok: &Tokenizer) -> u64 {
        self.messages.iter().map(|m| tok.count(&m.content)).sum()
    }
}

pub fn default_trace_tags() -> Vec<(String, String)> {
    vec![("<think>".into(), "</think>".into())]
}

/// Joins the text around a removed span with a single newline, or with
/// nothing when either side is empty.
fn join_around(left: &str, right: &str) -> String {
    let (l, r) = (left.trim_end(), right.trim_start());
    match (l.is_empty(), r.is_empty()) {
        (true, _) => r.to_string(),
        (_, true) => l.to_string(),
        _ => format!("{l}\n{r}"),
    }
}

/// Removes every `open … close` span (nesting-aware) from `text`. An
/// opener without a matching closer removes through the end.
pub fn strip_traces_text(text: &str, tags: &[(String, String)]) -> String {
    let mut out = text.to_string();
    loop {
        let Some((start, open, close)) = tags
            .iter()
            .filter_map(|(o, c)| out.find(o.as_str()).map(|p| (p, o, c)))
            .min_by_key(|(p, o, _)| (*p, std::cmp::Reverse(o.len())))
        else {
            return out;
        };
        let mut depth = 0usize;
        let mut i = start;
        let mut end = out.len();
        while i < out.len() {
            if out[i..].starts_with(open.as_str()) {
                depth += 1;
                i += open.len();
            } else if out[i..].starts_with(close.as_str()) {
                depth -= 1;
                i += close.len();
                if depth == 0 {
                    end = i;
                    break;
                }
            } else {
                i += out[i..].chars().next().map_or(1, char::len_utf8);
            }
        }
        out = join_around(&out[..start], &out[end..]);
    }
}

pub fn strip_reasoning_traces(e: &SftEntry, tags: &[(String, String)]) -> SftEntry {
    let mut e = e.clone();
    for m in e.messages.iter_mut().filter(|m| m.role == Role::Assistant) {
        if tags.iter().any(|(o, _)| m.content.contains(o.as_str())) {
            m.content = strip_traces_text(&m.content, tags);
        }
    }
    e
}

pub fn default_self_ref_patterns() -> Vec<String> {
    ["as an ai language model", "como modelo de linguagem", "chatgpt", "gpt-4", "claude", "gemini", "llama", "qwen", "deepseek", "openai"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Drops entries whose assistant turns mention another model or speak as
/// one. User turns are not scanned.
pub fn filter_self_referential(e: &SftEntry, patterns: &[String]) -> Verdict {
    let lowered: Vec<String> = patterns.iter().map(|p| p.to_lowercase()).collect();
    let hit = e
        .messages
        .iter()
        .filter(|m| m.role == Role::Assistant)
        .any(|m| {
            let c = m.content.to_lowercase();
            lowered.iter().any(|p| c.contains(p.as_str()))
        });
    if hit {
        Verdict::drop(STAGE, Reason::PosttrainSelfRef)
    } else {
        Verdict::keep(STAGE)
    }
}

pub const QUALITY_RANGE: (f64, f64) = (1.0, 6.0);

/// Keep iff the score is at least `min_score`; unscored entries pass. A
/// score outside [1, 6] is a data error.
pub fn quality_verdict(e: &SftEntry, min_score: f64) -> Result<Verdict> {
    match e.quality_score {
        None => Ok(Verdict::keep(STAGE)),
        Some(s) if !(QUALITY_RANGE.0..=QUALITY_RANGE.1).contains(&s) => {
            Err(Error::data(format!("entry {}: quality score {s} outside [1, 6]", e.id)))
        }
        Some(s) if s < min_score => Ok(Verdict::drop(STAGE, Reason::PosttrainLowQuality)),
        Some(_) => Ok(Verdict::keep(STAGE)),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityFilterOutcome {
    pub kept: Vec<SftEntry>,
    pub dropped: u64,
    /// Kept entries that carried no score.
    pub unscored: u64,
    /// Entries with an out-of-range score, with the error text.
    pub quarantined: Vec<(SftEntry, String)>,
}

pub fn filter_quality_score<I>(entries: I, min_score: f64) -> Result<QualityFilterOutcome>
where
    I: IntoIterator<Item = SftEntry>,
{
    if !(QUALITY_RANGE.0..=QUALITY_RANGE.1).contains(&min_score) {
        return Err(Error::config(format!("min quality score {min_score} outside [1, 6]")));
    }
    let mut out = QualityFilterOutcome::default();
    for e in entries {
        match quality_verdict(&e, min_score) {
            Err(err) => out.quarantined.push((e, err.to_string())),
            Ok(v) if v.is_keep() => {
                if e.quality_score.is_none() {
                    out.unscored += 1;
                }
                out.kept.push(e);
            }
            Ok(_) => out.dropped += 1,
        }
    }
    Ok(out)
}

/// NFC, whitespace-collapsed concatenation of every user turn.
pub fn prompt_key(e: &SftEntry) -> String {
    let users: Vec<String> = e
        .messages
        .iter()
        .filter(|m| m.role == Role::User)
        .map(|m| collapse_whitespace(&nfc(&m.content)))
        .collect();
    users.join("\u{1f}")
}

/// Streaming first-wins deduplication on [`prompt_key`].
#[derive(Debug, Default)]
pub struct PromptDeduper {
    seen: HashSet<String>,
}

impl PromptDeduper {
    pub fn check(&mut self, e: &SftEntry) -> Verdict {
        if self.seen.insert(prompt_key(e)) {
            Verdict::keep(STAGE)
        } else {
            Verdict::drop(STAGE, Reason::PosttrainDuplicatePrompt)
        }
    }
}

pub fn dedup_by_prompt<I: IntoIterator<Item = SftEntry>>(entries: I) -> Vec<SftEntry> {
    let mut d = PromptDeduper::default();
    entries.into_iter().filter(|e| d.check(e).is_keep()).collect()
}

/// Uniform value in [0, 1) from `(seed, id)`.
pub fn selection_value(seed: u64, id: &str) -> f64 {
    (xxh3_64_with_seed(id.as_bytes(), seed) >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnboxOutcome {
    NotSelected,
    /// Selected; carries the number of `\boxed{}` rewritten (possibly 0).
    Rewritten(usize),
    /// Selected but braces did not balance; left unchanged.
    Unbalanced,
}

/// Replaces every `\boxed{X}` with `X`; `None` when a box is unbalanced.
pub fn unbox_text(text: &str) -> Option<(String, usize)> {
    const OPEN: &str = "\\boxed{";
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut n = 0;
    while let Some(p) = rest.find(OPEN) {
        out.push_str(&rest[..p]);
        let body = &rest[p + OPEN.len()..];
        let mut depth = 1usize;
        let mut close = None;
        for (i, c) in body.char_indices() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let close = close?;
        out.push_str(&body[..close]);
        rest = &body[close + 1..];
        n += 1;
    }
    out.push_str(rest);
    Some((out, n))
}

/// With probability `p` (a deterministic function of `(seed, id)`), strips
/// `\boxed{}` wrappers from the last assistant message.
pub fn unbox_math(e: &SftEntry, p: f64, seed: u64) -> (SftEntry, UnboxOutcome) {
    if selection_value(seed, &e.id) >= p {
        return (e.clone(), UnboxOutcome::NotSelected);
    }
    let mut e = e.clone();
    let Some(last) = e.messages.iter_mut().rev().find(|m| m.role == Role::Assistant) else {
        return (e, UnboxOutcome::Rewritten(0));
    };
    match unbox_text(&last.content) {
        Some((text, n)) => {
            last.content = text;
            (e, UnboxOutcome::Rewritten(n))
        }
        None => (e, UnboxOutcome::Unbalanced),
    }
}

pub const DEFAULT_MAX_TOKENS: u64 = 32_768;

/// Drops entries strictly longer than `max_tokens`.
pub fn filter_long_context(e: &SftEntry, max_tokens: u64) -> Verdict {
    if e.token_count > max_tokens {
        Verdict::drop(STAGE, Reason::PosttrainTooLong)
    } else {
        Verdict::keep(STAGE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMeta {
    pub repo: String,
    pub stars: u64,
    pub forks: u64,
}

pub const DEFAULT_MIN_STARS: u64 = 500;
pub const DEFAULT_MIN_FORKS: u64 = 100;

pub fn filter_code_repos(m: &RepoMeta, min_stars: u64, min_forks: u64) -> Verdict {
    if m.stars >= min_stars && m.forks >= min_forks {
        Verdict::keep(STAGE)
    } else {
        Verdict::drop(STAGE, Reason::PosttrainRepoPopularity)
    }
}

/// Settings for [`SftProcessor`]. Defaults follow the published recipe:
/// traces stripped, self-references dropped, scores below 5 dropped,
/// 32K-token cap, one entry per prompt, half of the entries unboxed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SftConfig {
    pub strip_traces: bool,
    pub trace_tags: Vec<(String, String)>,
    pub self_ref_patterns: Vec<String>,
    pub min_quality: f64,
    pub max_tokens: u64,
    pub dedup_prompts: bool,
    pub unbox_fraction: f64,
    pub seed: u64,
}

impl Default for SftConfig {
    fn default() -> Self {
        SftConfig {
            strip_traces: true,
            trace_tags: default_trace_tags(),
            self_ref_patterns: default_self_ref_patterns(),
            min_quality: 5.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            dedup_prompts: true,
            unbox_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(QUALITY_RANGE.0..=QUALITY_RANGE.1).contains(&self.min_quality) {
            return Err(Error::config(format!("min quality score {} outside [1, 6]", self.min_quality)));
        }
        if !(0.0..=1.0).contains(&self.unbox_fraction) {
            return Err(Error::config(format!("unbox fraction {} outside [0, 1]", self.unbox_fraction)));
        }
        Ok(())
    }
}

/// Counters beyond the stage stats.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftCounters {
    pub unscored: u64,
    pub unboxed: u64,
    pub unbalanced_boxes: u64,
}

/// Runs the per-entry rules in order over a stream: validate, strip traces
/// (and recount tokens), self-reference, quality score, length, prompt
/// dedup, unboxing. Order matters only for the stream-dependent prompt
/// dedup, which sees entries that passed everything else.
pub struct SftProcessor<'t> {
    cfg: SftConfig,
    tokenizer: &'t Tokenizer,
    prompts: PromptDeduper,
    pub stats: crate::model::StageStats,
    pub counters: SftCounters,
}

impl<'t> SftProcessor<'t> {
    pub fn new(cfg: SftConfig, tokenizer: &'t Tokenizer) -> Result<Self> {
        cfg.validate()?;
        Ok(SftProcessor {
            cfg,
            tokenizer,
            prompts: PromptDeduper::default(),
            stats: crate::model::StageStats::new(STAGE),
            counters: SftCounters::default(),
        })
    }

    /// `Ok(Err(reason))` for a dropped entry; malformed entries are data
    /// errors.
    pub fn process(&mut self, e: SftEntry) -> Result<std::result::Result<SftEntry, Reason>> {
        e.validate()?;
        let tokens_in = e.count_tokens(self.tokenizer);
        let mut e = if self.cfg.strip_traces { strip_reasoning_traces(&e, &self.cfg.trace_tags) } else { e };
        e.token_count = e.count_tokens(self.tokenizer);
        let verdict = match quality_verdict(&e, self.cfg.min_quality) {
            Err(_) => Verdict::drop(STAGE, Reason::PosttrainBadScore),
            Ok(q) => {
                let checks = [filter_self_referential(&e, &self.cfg.self_ref_patterns), q, filter_long_context(&e, self.cfg.max_tokens)];
                match checks.into_iter().find(|v| !v.is_keep()) {
                    Some(v) => v,
                    None if self.cfg.dedup_prompts => self.prompts.check(&e),
                    None => Verdict::keep(STAGE),
                }
            }
        };
        if let Some(r) = verdict.reason() {
            self.stats.record_drop(r, tokens_in);
            return Ok(Err(r));
        }
        if e.quality_score.is_none() {
            self.counters.unscored += 1;
        }
        let (mut e, outcome) = unbox_math(&e, self.cfg.unbox_fraction, self.cfg.seed);
        match outcome {
            UnboxOutcome::Rewritten(n) if n > 0 => self.counters.unboxed += 1,
            UnboxOutcome::Unbalanced => self.counters.unbalanced_boxes += 1,
            _ => {}
        }
        e.token_count = e.count_tokens(self.tokenizer);
        self.stats.record_keep(tokens_in, e.token_count);
        Ok(Ok(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(id: &str, user: &str, assistant: &str) -> SftEntry {
        SftEntry {
            id: id.into(),
            source: "t".into(),
            messages: vec![Message::new(Role::User, user), Message::new(Role::Assistant, assistant)],
            language: "por".into(),
            quality_score: None,
            token_count: 0,
        }
    }

    #[test]
    fn processor_applies_rules_in_order() {
        let tok = Tokenizer::new(&crate::model::TokenizerSpec::whitespace()).unwrap();
        let cfg = SftConfig { unbox_fraction: 1.0, ..SftConfig::default() };
        let mut p = SftProcessor::new(cfg, &tok).unwrap();
        let mut low = entry("low", "q1", "a");
        low.quality_score = Some(4.9);
        let mut bad = entry("bad", "q2", "a");
        bad.quality_score = Some(7.0);
        let inputs = vec![
            entry("a", "Quanto é 6 x 7?", "<think>contas</think>É \\boxed{42}."),
            entry("b", "Quanto é 6 x 7?  ", "Outra resposta."),
            entry("c", "Quem és tu?", "Sou o ChatGPT."),
            low,
            bad,
        ];
        let out: Vec<_> = inputs.into_iter().map(|e| p.process(e).unwrap()).collect();
        let kept = out[0].as_ref().unwrap();
        assert_eq!(kept.messages[1].content, "É 42.");
        assert_eq!(kept.token_count, 5 + 2);
        assert_eq!(out[1], Err(Reason::PosttrainDuplicatePrompt));
        assert_eq!(out[2], Err(Reason::PosttrainSelfRef));
        assert_eq!(out[3], Err(Reason::PosttrainLowQuality));
        assert_eq!(out[4], Err(Reason::PosttrainBadScore));
        assert_eq!((p.stats.kept, p.stats.dropped()), (1, 4));
        assert_eq!(p.counters.unboxed, 1);
        assert!(p.stats.is_balanced());
    }

    #[test]
    fn validation() {
        assert!(entry("a", "q", "r").validate().is_ok());
        let mut e = entry("a", "q", "r");
        e.messages.swap(0, 1);
        assert!(e.validate().is_err());
        let mut e = entry("a", "q", "r");
        e.messages.insert(0, Message::new(Role::System, "s"));
        assert!(e.validate().is_ok());
        assert!(entry("a", "q", "  ").validate().is_err());
    }

    #[test]
    fn traces() {
        let tags = default_trace_tags();
        let strip = |s: &str| strip_traces_text(s, &tags);
        assert_eq!(strip("A<think>x</think>B"), "A\nB");
        assert_eq!(strip("A  <think>x</think>\n\n B"), "A\nB");
        assert_eq!(strip("<think>a<think>b</think>c</think>d"), "d");
        assert_eq!(strip("resposta <think>sem fim"), "resposta");
        assert_eq!(strip("nada"), "nada");
        let e = entry("a", "<think>fica</think>", "x<think>y</think>z");
        let s = strip_reasoning_traces(&e, &tags);
        assert_eq!(s.messages[0].content, "<think>fica</think>");
        assert_eq!(s.messages[1].content, "x\nz");
        assert_eq!(strip_reasoning_traces(&s, &tags), s);
    }

    #[test]
    fn self_reference() {
        let p = default_self_ref_patterns();
        assert!(!filter_self_referential(&entry("a", "q", "Eu sou o ChatGPT"), &p).is_keep());
        assert!(!filter_self_referential(&entry("a", "q", "sou o chatgpt"), &p).is_keep());
        assert!(filter_self_referential(&entry("a", "O ChatGPT disse isto", "Não sei."), &p).is_keep());
    }

    #[test]
    fn quality_bounds() {
        let mut e = entry("a", "q", "r");
        e.quality_score = Some(5.0);
        assert!(quality_verdict(&e, 5.0).unwrap().is_keep());
        e.quality_score = Some(4.9);
        assert_eq!(quality_verdict(&e, 5.0).unwrap().reason(), Some(Reason::PosttrainLowQuality));
        e.quality_score = Some(7.0);
        assert!(quality_verdict(&e, 5.0).is_err());
        let mut none = entry("b", "q", "r");
        none.quality_score = None;
        let out = filter_quality_score([e, none], 5.0).unwrap();
        assert_eq!((out.kept.len(), out.unscored, out.quarantined.len()), (1, 1, 1));
    }

    #[test]
    fn prompt_dedup() {
        let kept = dedup_by_prompt([entry("a", "Olá  mundo ", "r1"), entry("b", "Olá mundo", "r2"), entry("c", "Outro", "r3")]);
        assert_eq!(kept.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), vec!["a", "c"]);
    }

    #[test]
    fn unboxing() {
        let e = entry("a", "q", "A resposta é \\boxed{42}.");
        assert_eq!(unbox_math(&e, 1.0, 0).0.messages[1].content, "A resposta é 42.");
        assert_eq!(unbox_math(&e, 0.0, 0).0, e);
        assert_eq!(unbox_text("\\boxed{\\frac{1}{2}}"), Some(("\\frac{1}{2}".into(), 1)));
        let bad = entry("b", "q", "\\boxed{x");
        assert_eq!(unbox_math(&bad, 1.0, 0).1, UnboxOutcome::Unbalanced);
        let n = (0..10_000).filter(|i| selection_value(7, &format!("e{i}")) < 0.5).count();
        assert!((4800..=5200).contains(&n), "{n}");
    }

    #[test]
    fn length_and_repos() {
        let mut e = entry("a", "q", "r");
        e.token_count = 32_768;
        assert!(filter_long_context(&e, DEFAULT_MAX_TOKENS).is_keep());
        e.token_count = 32_769;
        assert!(!filter_long_context(&e, DEFAULT_MAX_TOKENS).is_keep());
        let repo = |s, f| RepoMeta { repo: "r".into(), stars: s, forks: f };
        assert!(filter_code_repos(&repo(500, 100), 500, 100).is_keep());
        assert!(!filter_code_repos(&repo(499, 1000), 500, 100).is_keep());
        assert!(!filter_code_repos(&repo(10_000, 99), 500, 100).is_keep());
    }

    proptest! {
        #[test]
        fn strip_idempotent(parts in proptest::collection::vec(
            prop_oneof![Just("<think>"), Just("</think>"), Just(" "), Just("\n"), Just("a"), Just("bc")], 0..20)) {
            let tags = default_trace_tags();
            let once = strip_traces_text(&parts.concat(), &tags);
            prop_assert_eq!(strip_traces_text(&once, &tags), once);
        }
    }
}
