//! Pipeline configuration: TOML in, a validated and fully resolved stage
//! list out.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::dedup::DedupConfig;
use crate::error::{Error, Result};
use crate::extract::ExtractionConfig;
use crate::filters::{FineWebQualityConfig, GopherQualityConfig, GopherRepetitionConfig, LanguageFilterConfig, UrlRules, VariantConfig};
use crate::ingest::EmbargoPolicy;
use crate::model::TokenizerSpec;
use crate::split::{default_selection, QualitySplit, SplitThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Ingest,
    Embargo,
    Url,
    Extract,
    Language,
    GopherRepetition,
    GopherQuality,
    FinewebQuality,
    Variant,
    Pii,
    Dedup,
    Split,
}

impl StageKind {
    pub const ALL: [StageKind; 12] = [
        StageKind::Ingest,
        StageKind::Embargo,
        StageKind::Url,
        StageKind::Extract,
        StageKind::Language,
        StageKind::GopherRepetition,
        StageKind::GopherQuality,
        StageKind::FinewebQuality,
        StageKind::Variant,
        StageKind::Pii,
        StageKind::Dedup,
        StageKind::Split,
    ];

    /// Also the stage name in reports and the default config section.
    pub fn name(self) -> &'static str {
        match self {
            StageKind::Ingest => crate::ingest::STAGE,
            StageKind::Embargo => crate::ingest::EMBARGO_STAGE,
            StageKind::Url => crate::filters::url::STAGE,
            StageKind::Extract => crate::extract::STAGE,
            StageKind::Language => crate::filters::lang::STAGE,
            StageKind::GopherRepetition => crate::filters::gopher::REPETITION_STAGE,
            StageKind::GopherQuality => crate::filters::gopher::QUALITY_STAGE,
            StageKind::FinewebQuality => crate::filters::fineweb::STAGE,
            StageKind::Variant => crate::filters::variant::STAGE,
            StageKind::Pii => crate::pii::STAGE,
            StageKind::Dedup => crate::dedup::STAGE,
            StageKind::Split => crate::split::STAGE,
        }
    }

    /// Stages that need to see the whole corpus at once.
    pub fn is_global(self) -> bool {
        matches!(self, StageKind::Dedup | StageKind::Split)
    }

    /// The default chain, in order.
    pub fn default_chain() -> Vec<StageKind> {
        StageKind::ALL.to_vec()
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let known: Vec<_> = StageKind::ALL.iter().map(|k| k.name()).collect();
            Error::config(format!("unknown stage `{s}` (known: {})", known.join(", ")))
        })
    }
}

/// One entry of `stages`: a bare stage name, or `{ stage = "...", config =
/// "section" }` to read its settings from a differently named section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRef {
    pub stage: StageKind,
    pub config: Option<String>,
}

impl StageRef {
    pub fn section(&self) -> &str {
        self.config.as_deref().unwrap_or(self.stage.name())
    }
}

impl<'de> Deserialize<'de> for StageRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Full { stage: String, config: Option<String> },
        }
        let (name, config) = match Raw::deserialize(d)? {
            Raw::Name(n) => (n, None),
            Raw::Full { stage, config } => (stage, config),
        };
        let stage = name.parse().map_err(serde::de::Error::custom)?;
        Ok(StageRef { stage, config })
    }
}

/// Settings of the PII stage beyond the fixed redaction rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiiStageConfig {
    /// Repair mojibake before redacting.
    pub fix_encoding: bool,
    /// TSV replacement table; the built-in one when unset.
    pub mojibake_table: Option<PathBuf>,
}

impl Default for PiiStageConfig {
    fn default() -> Self {
        PiiStageConfig { fix_encoding: true, mojibake_table: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UrlStageConfig {
    #[serde(flatten)]
    pub rules: UrlRules,
    /// One domain per line, merged into `rules.blocklist`.
    pub blocklist_file: Option<PathBuf>,
}

impl Default for UrlStageConfig {
    fn default() -> Self {
        UrlStageConfig { rules: UrlRules::default(), blocklist_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitStageConfig {
    /// JSONL `{id, score}` (or `{id, label}`) from the external classifier.
    pub scores: Option<PathBuf>,
    /// Name of the classifier behind `scores`, carried into reports.
    pub source_name: String,
    /// Use the built-in heuristic scorer instead of a score file. Meant for
    /// fixtures only; reports say so.
    pub fallback: bool,
    #[serde(flatten)]
    pub thresholds: SplitThresholds,
    pub selected: BTreeSet<QualitySplit>,
}

impl Default for SplitStageConfig {
    fn default() -> Self {
        SplitStageConfig {
            scores: None,
            source_name: "external".into(),
            fallback: false,
            thresholds: SplitThresholds::default(),
            selected: default_selection(),
        }
    }
}

impl SplitStageConfig {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        match (&self.scores, self.fallback) {
            (None, false) => Err(Error::config("split: set `scores` to a score file, or `fallback = true`")),
            (Some(_), true) => Err(Error::config("split: `scores` and `fallback` are mutually exclusive")),
            _ => Ok(()),
        }?;
        if self.selected.contains(&QualitySplit::Unscored) {
            return Err(Error::config("split: `unscored` is a quarantine stream and cannot be selected"));
        }
        Ok(())
    }
}

/// A stage with its effective settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "stage", content = "settings", rename_all = "snake_case")]
pub enum StageSettings {
    Ingest,
    Embargo(EmbargoPolicy),
    Url(UrlStageConfig),
    Extract(ExtractionConfig),
    Language(LanguageFilterConfig),
    GopherRepetition(GopherRepetitionConfig),
    GopherQuality(GopherQualityConfig),
    FinewebQuality(FineWebQualityConfig),
    Variant(VariantConfig),
    Pii(PiiStageConfig),
    Dedup(DedupConfig),
    Split(SplitStageConfig),
}

impl StageSettings {
    pub fn kind(&self) -> StageKind {
        match self {
            StageSettings::Ingest => StageKind::Ingest,
            StageSettings::Embargo(_) => StageKind::Embargo,
            StageSettings::Url(_) => StageKind::Url,
            StageSettings::Extract(_) => StageKind::Extract,
            StageSettings::Language(_) => StageKind::Language,
            StageSettings::GopherRepetition(_) => StageKind::GopherRepetition,
            StageSettings::GopherQuality(_) => StageKind::GopherQuality,
            StageSettings::FinewebQuality(_) => StageKind::FinewebQuality,
            StageSettings::Variant(_) => StageKind::Variant,
            StageSettings::Pii(_) => StageKind::Pii,
            StageSettings::Dedup(_) => StageKind::Dedup,
            StageSettings::Split(_) => StageKind::Split,
        }
    }
}

fn default_workers() -> usize {
    1
}

fn default_sort_run() -> usize {
    1 << 20
}

fn default_stages() -> Vec<StageRef> {
    StageKind::default_chain().into_iter().map(|stage| StageRef { stage, config: None }).collect()
}

/// The TOML file as written. Stage settings live in top-level tables named
/// after the stage (or after the `config` reference of a stage entry).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub run_id: String,
    #[serde(default = "default_stages")]
    pub stages: Vec<StageRef>,
    /// Paths or glob patterns, relative to the config file.
    pub input: Vec<String>,
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tokenizer: TokenizerSpec,
    /// Run the per-document stages in memory instead of through per-stage
    /// files. Output is identical either way.
    #[serde(default)]
    pub fused: bool,
    /// Records per in-memory run of the dedup band index sort.
    #[serde(default = "default_sort_run")]
    pub sort_run_records: usize,
    #[serde(flatten)]
    pub sections: BTreeMap<String, toml::Value>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(body: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(body).map_err(|e| Error::config(format!("pipeline config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml(&body, base)
    }

    fn rebase(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.rebase(&self.output_dir)
    }

    fn section<T: serde::de::DeserializeOwned + Default>(&self, r: &StageRef) -> Result<T> {
        match self.sections.get(r.section()) {
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e| Error::config(format!("section [{}]: {e}", r.section()))),
            None if r.config.is_some() => Err(Error::config(format!(
                "stage `{}` references config section [{}], which does not exist",
                r.stage,
                r.section()
            ))),
            None => Ok(T::default()),
        }
    }

    fn settings(&self, r: &StageRef) -> Result<StageSettings> {
        let rebase_opt = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                *x = self.rebase(x);
            }
        };
        Ok(match r.stage {
            StageKind::Ingest => StageSettings::Ingest,
            StageKind::Embargo => {
                let v = self.sections.get(r.section()).ok_or_else(|| {
                    Error::config(format!("stage `embargo` needs a [{}] section with `processing_date`", r.section()))
                })?;
                StageSettings::Embargo(
                    v.clone().try_into().map_err(|e| Error::config(format!("section [{}]: {e}", r.section())))?,
                )
            }
            StageKind::Url => {
                let mut c: UrlStageConfig = self.section(r)?;
                rebase_opt(&mut c.blocklist_file);
                c.rules.validate()?;
                if let Some(p) = c.blocklist_file.take() {
                    // inline the list so the config hash covers its contents
                    c.rules.load_blocklist(&p)?;
                }
                StageSettings::Url(c)
            }
            StageKind::Extract => {
                let c: ExtractionConfig = self.section(r)?;
                c.validate()?;
                StageSettings::Extract(c)
            }
            StageKind::Language => {
                let mut c: LanguageFilterConfig = self.section(r)?;
                rebase_opt(&mut c.profiles);
                c.validate()?;
                StageSettings::Language(c)
            }
            StageKind::GopherRepetition => {
                let c: GopherRepetitionConfig = self.section(r)?;
                c.validate()?;
                StageSettings::GopherRepetition(c)
            }
            StageKind::GopherQuality => {
                let c: GopherQualityConfig = self.section(r)?;
                c.validate()?;
                StageSettings::GopherQuality(c)
            }
            StageKind::FinewebQuality => {
                let c: FineWebQualityConfig = self.section(r)?;
                c.validate()?;
                StageSettings::FinewebQuality(c)
            }
            StageKind::Variant => {
                let mut c: VariantConfig = self.section(r)?;
                rebase_opt(&mut c.lexicon);
                c.validate()?;
                StageSettings::Variant(c)
            }
            StageKind::Pii => {
                let mut c: PiiStageConfig = self.section(r)?;
                rebase_opt(&mut c.mojibake_table);
                StageSettings::Pii(c)
            }
            StageKind::Dedup => {
                let c: DedupConfig = self.section(r)?;
                c.validate()?;
                StageSettings::Dedup(c)
            }
            StageKind::Split => {
                let mut c: SplitStageConfig = self.section(r)?;
                rebase_opt(&mut c.scores);
                c.validate()?;
                StageSettings::Split(c)
            }
        })
    }

    /// Checks every invariant and resolves stage settings. Nothing is read
    /// from the inputs yet.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.run_id.trim().is_empty() {
            return Err(Error::config("run_id is empty"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        if self.stages.is_empty() {
            return Err(Error::config("no stages configured"));
        }
        if self.sort_run_records == 0 {
            return Err(Error::config("sort_run_records must be at least 1"));
        }
        self.tokenizer.validate()?;
        let mut seen = BTreeSet::new();
        for (i, r) in self.stages.iter().enumerate() {
            if !seen.insert(r.stage) {
                return Err(Error::config(format!("stage `{}` listed twice", r.stage)));
            }
            if r.stage == StageKind::Ingest && i != 0 {
                return Err(Error::config("`ingest` must be the first stage"));
            }
        }
        // global stages run after every per-document stage, split last
        if let Some(first_global) = self.stages.iter().position(|r| r.stage.is_global()) {
            if let Some(late) = self.stages[first_global..].iter().find(|r| !r.stage.is_global()) {
                return Err(Error::config(format!(
                    "stage `{}` must come before `dedup` and `split`",
                    late.stage
                )));
            }
        }
        if let (Some(d), Some(s)) = (
            self.stages.iter().position(|r| r.stage == StageKind::Dedup),
            self.stages.iter().position(|r| r.stage == StageKind::Split),
        ) {
            if s < d {
                return Err(Error::config("`split` must come after `dedup`"));
            }
        }
        let known: BTreeSet<&str> = StageKind::ALL.iter().map(|k| k.name()).chain(self.stages.iter().map(|r| r.section())).collect();
        if let Some(unknown) = self.sections.keys().find(|k| !known.contains(k.as_str())) {
            return Err(Error::config(format!("unknown config section or key `{unknown}`")));
        }
        let stages = self.stages.iter().map(|r| self.settings(r)).collect::<Result<Vec<_>>>()?;
        let resolved = ResolvedConfig {
            run_id: self.run_id.clone(),
            seed: self.seed,
            tokenizer: self.tokenizer.clone(),
            input: self.input.clone(),
            stages,
        };
        Ok(resolved)
    }

    /// A config for running `kinds` outside a full pipeline run. `file` may
    /// be a full pipeline config or just the stage sections; top-level run
    /// keys other than `tokenizer` are ignored.
    pub fn for_stages(kinds: &[StageKind], file: Option<&Path>) -> Result<Self> {
        const RUN_KEYS: [&str; 8] = ["run_id", "stages", "input", "output_dir", "workers", "seed", "fused", "sort_run_records"];
        let (mut table, base) = match file {
            Some(p) => {
                let body = std::fs::read_to_string(p).map_err(|e| Error::at_path(p, e))?;
                let t: toml::Table = toml::from_str(&body).map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
                (t, p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf())
            }
            None => (toml::Table::new(), PathBuf::from(".")),
        };
        let tokenizer = match table.remove("tokenizer") {
            Some(v) => v.try_into().map_err(|e| Error::config(format!("tokenizer: {e}")))?,
            None => TokenizerSpec::default(),
        };
        for k in RUN_KEYS {
            table.remove(k);
        }
        Ok(PipelineConfig {
            run_id: "adhoc".into(),
            stages: kinds.iter().map(|&stage| StageRef { stage, config: None }).collect(),
            input: Vec::new(),
            output_dir: PathBuf::from("."),
            workers: 1,
            seed: 0,
            tokenizer,
            fused: true,
            sort_run_records: default_sort_run(),
            sections: table.into_iter().collect(),
            base_dir: base,
        })
    }

    /// Input files matching `input`, sorted and deduplicated. A pattern
    /// without glob characters must name an existing file; a glob may match
    /// nothing.
    pub fn input_files(&self) -> Result<Vec<PathBuf>> {
        let mut files = BTreeSet::new();
        for pat in &self.input {
            let full = self.rebase(Path::new(pat));
            if pat.contains(['*', '?', '[']) {
                let s = full.to_string_lossy();
                let paths = glob::glob(&s).map_err(|e| Error::config(format!("input pattern `{pat}`: {e}")))?;
                for p in paths {
                    let p = p.map_err(|e| Error::data(format!("input pattern `{pat}`: {e}")))?;
                    if p.is_file() {
                        files.insert(p);
                    }
                }
            } else if full.is_file() {
                files.insert(full);
            } else {
                return Err(Error::config(format!("input `{}` does not exist", full.display())));
            }
        }
        Ok(files.into_iter().collect())
    }
}

/// Everything that determines the output, and nothing that does not (worker
/// count, fused mode and output location are left out).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub run_id: String,
    pub seed: u64,
    pub tokenizer: TokenizerSpec,
    pub input: Vec<String>,
    pub stages: Vec<StageSettings>,
}

impl ResolvedConfig {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn kinds(&self) -> Vec<StageKind> {
        self.stages.iter().map(StageSettings::kind).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
run_id = "t"
input = ["*.jsonl"]
output_dir = "out"
"#;

    fn parse(extra: &str) -> Result<PipelineConfig> {
        PipelineConfig::from_toml(&format!("{BASE}{extra}"), Path::new("/tmp"))
    }

    #[test]
    fn stage_refs_and_sections() {
        let cfg = parse(
            r#"
stages = ["url", { stage = "language", config = "strict_lang" }, "dedup"]
[strict_lang]
min_confidence = 0.9
[dedup]
bands = 16
rows_per_band = 7
"#,
        )
        .unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.kinds(), [StageKind::Url, StageKind::Language, StageKind::Dedup]);
        match &r.stages[1] {
            StageSettings::Language(l) => assert_eq!(l.min_confidence, 0.9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariants_are_config_errors() {
        let bad = [
            "stages = [\"url\", \"ingest\"]",
            "stages = [\"dedup\", \"url\"]",
            "stages = [\"split\", \"dedup\"]\n[split]\nfallback = true",
            "stages = [\"url\", \"url\"]",
            "stages = [\"nonsense\"]",
            "stages = [{ stage = \"url\", config = \"missing\" }]",
            "workers = 0\nstages = [\"url\"]",
            "stages = [\"dedup\"]\n[dedup]\nbands = 10",
            "stages = [\"embargo\"]",
            "stages = [\"split\"]",
            "stages = [\"url\"]\n[typo_section]\nx = 1",
            "stages = [\"embargo\"]\n[embargo]\nembargo = \"1y\"",
        ];
        for extra in bad {
            let err = parse(extra).and_then(|c| c.resolve().map(|_| ())).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{extra}: {err}");
        }
    }

    #[test]
    fn hash_ignores_workers_but_not_thresholds() {
        let stages = "stages = [\"url\", \"gopher_quality\"]\n";
        let a = parse(&format!("{stages}workers = 1")).unwrap().resolve().unwrap().hash();
        let b = parse(&format!("{stages}workers = 8\nfused = true")).unwrap().resolve().unwrap().hash();
        let c = parse(&format!("{stages}[gopher_quality]\nmin_words = 20")).unwrap().resolve().unwrap().hash();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn default_chain_needs_embargo_and_split_sections() {
        let cfg = parse(
            "[embargo]\nprocessing_date = \"2025-09-01\"\n[split]\nfallback = true\n",
        )
        .unwrap();
        assert_eq!(cfg.resolve().unwrap().kinds(), StageKind::default_chain());
    }
}
