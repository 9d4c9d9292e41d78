//! Config-driven, sharded, resumable orchestration of the whole chain.
//!
//! A run has three phases:
//!
//! 1. **Per shard** (one shard per input file, in parallel): ingest and the
//!    per-document stages. Each stage reads the previous stage's JSONL and
//!    writes its own (or, with `fused`, everything happens in memory). A
//!    finished shard leaves a `done.json` marker; rerunning the same
//!    config skips it.
//! 2. **Dedup** (corpus-wide): band index files, external sort, clustering.
//! 3. **Routing** (per shard, in parallel): duplicate removal, quality
//!    splits, final outputs sorted by document id.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! report.json                      RunReport
//! shards/shard-NNNNN/              per-stage JSONL, drops.jsonl, done.json
//! dedup/clusters.jsonl             {survivor, members}
//! splits/<split>/shard-NNNNN.jsonl when the chain ends in `split`
//! output/shard-NNNNN.jsonl         otherwise
//! drops/shard-NNNNN.jsonl          {id, stage, reason} for every drop, by id
//! ```

mod config;
mod dedup_phase;
mod stage;

pub use config::{PiiStageConfig, PipelineConfig, ResolvedConfig, SplitStageConfig, StageKind, StageRef, StageSettings, UrlStageConfig};
pub use dedup_phase::{find_duplicates, CorpusShard, DuplicateScan};

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dedup::{DedupConfig, DuplicateCluster};
use crate::error::{Error, Result};
use crate::filters::GopherQualityConfig;
use crate::ingest::{ingest_warc_file, Ingested};
use crate::io::{read_json_file, write_json_file, JsonlReader, JsonlWriter};
use crate::model::{merge_stats, Document, Reason, StageStats, Tokenizer};
use crate::split::{assign_quality, fallback_score, materialize_splits, QualityScoreTable, QualitySplit, SplitTotals, FALLBACK_SOURCE};
use stage::DocStage;

/// Annotation key carrying the config hash on every output document.
pub const CONFIG_HASH_KEY: &str = "config_hash";

/// One line of a drops file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

/// Document-count conservation over the whole chain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub documents_in: u64,
    pub documents_out: u64,
    pub documents_dropped: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub tokens_dropped: u64,
    /// Net tokens removed by rewriting stages (extraction, PII redaction).
    pub tokens_rewritten: i64,
    /// `documents_in == documents_out + documents_dropped`, every stage
    /// balanced, and each stage saw exactly what the previous one kept.
    pub balanced: bool,
}

impl Accounting {
    pub fn from_stages(stages: &[StageStats]) -> Accounting {
        let (Some(first), Some(last)) = (stages.first(), stages.last()) else {
            return Accounting { balanced: true, ..Default::default() };
        };
        let dropped: u64 = stages.iter().map(StageStats::dropped).sum();
        let tokens_dropped: u64 = stages.iter().map(|s| s.tokens_dropped).sum();
        let rewritten: i64 = stages
            .iter()
            .map(|s| s.tokens_in as i64 - s.tokens_out as i64 - s.tokens_dropped as i64)
            .sum();
        let chained = stages
            .windows(2)
            .all(|w| w[1].seen == w[0].kept && w[1].tokens_in == w[0].tokens_out);
        Accounting {
            documents_in: first.seen,
            documents_out: last.kept,
            documents_dropped: dropped,
            tokens_in: first.tokens_in,
            tokens_out: last.tokens_out,
            tokens_dropped,
            tokens_rewritten: rewritten,
            balanced: chained && stages.iter().all(StageStats::is_balanced) && first.seen == last.kept + dropped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub config_hash: String,
    /// In config order.
    pub stages: Vec<StageStats>,
    pub wall_time_secs: f64,
    pub warnings: Vec<String>,
    pub shards: u64,
    pub accounting: Accounting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_clusters: Option<u64>,
    /// Per-split document and token totals, when the chain ends in `split`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<BTreeMap<QualitySplit, SplitTotals>>,
    /// Where split scores came from; the fallback scorer says so.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_source: Option<String>,
    /// Split thresholds in effect.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_thresholds: Option<crate::split::SplitThresholds>,
}

impl RunReport {
    /// The report with `wall_time_secs` zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> RunReport {
        RunReport { wall_time_secs: 0.0, ..self.clone() }
    }
}

/// Folds stage stats from several reports (e.g. one per shard or per run
/// part) by stage name, keeping first-seen order.
pub fn merge_stage_lists<'a, I>(lists: I) -> Result<Vec<StageStats>>
where
    I: IntoIterator<Item = &'a [StageStats]>,
{
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, StageStats> = BTreeMap::new();
    for list in lists {
        for s in list {
            match acc.get(&s.stage) {
                Some(prev) => {
                    let merged = merge_stats(prev, s)?;
                    acc.insert(s.stage.clone(), merged);
                }
                None => {
                    order.push(s.stage.clone());
                    acc.insert(s.stage.clone(), s.clone());
                }
            }
        }
    }
    Ok(order.into_iter().map(|n| acc.remove(&n).expect("stage present")).collect())
}

/// Per-document stages run in memory, one document at a time. Global
/// stages (dedup, split) and ingest are not part of a chain.
pub struct DocChain {
    stages: Vec<DocStage>,
    tokenizer: Tokenizer,
    stats: Vec<StageStats>,
}

/// What became of one document.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainOutcome {
    Kept(Document),
    Dropped(DropRecord),
}

impl DocChain {
    pub fn new(settings: &[StageSettings], tokenizer: &crate::model::TokenizerSpec) -> Result<Self> {
        let mut stages = Vec::new();
        for s in settings {
            match DocStage::prepare(s)? {
                Some(st) => stages.push(st),
                None => return Err(Error::config(format!("stage `{}` cannot run per document", s.kind()))),
            }
        }
        let stats = stages.iter().map(|s| StageStats::new(s.kind().name())).collect();
        Ok(DocChain { stages, tokenizer: Tokenizer::new(tokenizer)?, stats })
    }

    pub fn process(&mut self, mut doc: Document) -> Result<ChainOutcome> {
        let mut tokens = self.tokenizer.count(&doc.text);
        for (stage, st) in self.stages.iter().zip(self.stats.iter_mut()) {
            let before = tokens;
            let verdict = stage.apply(&mut doc)?;
            if stage.rewrites() {
                tokens = self.tokenizer.count(&doc.text);
            }
            match verdict.reason() {
                None => st.record_keep(before, tokens),
                Some(r) => {
                    st.record_drop(r, before);
                    return Ok(ChainOutcome::Dropped(drop_record(&doc.id, r)));
                }
            }
        }
        Ok(ChainOutcome::Kept(doc))
    }

    pub fn stats(&self) -> &[StageStats] {
        &self.stats
    }
}

/// What a finished shard leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ShardDone {
    config_hash: String,
    input: String,
    final_file: String,
    stats: Vec<StageStats>,
    warnings: Vec<String>,
}

struct SplitPlan {
    cfg: SplitStageConfig,
    table: Option<QualityScoreTable>,
    stop_words: Vec<String>,
}

impl SplitPlan {
    fn assign(&self, doc: &Document) -> QualitySplit {
        match &self.table {
            Some(t) => assign_quality(&doc.id, t, &self.cfg.thresholds),
            None => self.cfg.thresholds.bucket(fallback_score(&doc.text, &self.stop_words)),
        }
    }

    fn source(&self) -> &str {
        match &self.table {
            Some(t) => &t.source_name,
            None => FALLBACK_SOURCE,
        }
    }
}

struct Ctx<'a> {
    hash: String,
    out: PathBuf,
    fused: bool,
    ingest: bool,
    doc_stages: Vec<DocStage>,
    tokenizer: Tokenizer,
    dedup: Option<&'a DedupConfig>,
    split: Option<SplitPlan>,
    sort_run_records: usize,
}

fn shard_name(i: usize) -> String {
    format!("shard-{i:05}")
}

fn remove_dir_if_exists(p: &Path) -> Result<()> {
    match fs::remove_dir_all(p) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::at_path(p, e)),
    }
}

enum Item {
    Doc(Document),
    Drop(String, Reason),
}

/// Feeds the shard's source documents (or ingest drops) to `f`.
fn for_each_source(ctx: &Ctx, input: &Path, warnings: &mut Vec<String>, mut f: impl FnMut(Item) -> Result<()>) -> Result<()> {
    if !ctx.ingest {
        for doc in JsonlReader::<Document, _>::open(input)? {
            let doc = doc?;
            doc.validate()?;
            f(Item::Doc(doc))?;
        }
        return Ok(());
    }
    warnings.extend(ingest_warc_file(input, |item| match item {
        Ingested::Doc(d) => f(Item::Doc(d)),
        Ingested::Drop { id, reason } => f(Item::Drop(id, reason)),
    })?);
    Ok(())
}

/// Runs one stage on one document and records the outcome.
fn step(ctx: &Ctx, stage: &DocStage, doc: &mut Document, tokens: &mut u64, stats: &mut StageStats) -> Result<Option<Reason>> {
    let before = *tokens;
    let verdict = stage.apply(doc)?;
    if stage.rewrites() {
        *tokens = ctx.tokenizer.count(&doc.text);
    }
    Ok(match verdict.reason() {
        None => {
            stats.record_keep(before, *tokens);
            None
        }
        Some(r) => {
            stats.record_drop(r, before);
            Some(r)
        }
    })
}

fn drop_record(id: &str, r: Reason) -> DropRecord {
    DropRecord { id: id.to_string(), stage: r.stage().to_string(), reason: r.code().to_string() }
}

fn process_shard_into(ctx: &Ctx, input: &Path, dir: &Path) -> Result<ShardDone> {
    let mut warnings = Vec::new();
    let mut drops = JsonlWriter::create(&dir.join("drops.jsonl"))?;
    let mut ingest_stats = ctx.ingest.then(|| StageStats::new(StageKind::Ingest.name()));
    let mut stats: Vec<StageStats> = ctx.doc_stages.iter().map(|s| StageStats::new(s.kind().name())).collect();
    let final_file;

    if ctx.fused || ctx.doc_stages.is_empty() {
        final_file = "docs.jsonl".to_string();
        let mut out = JsonlWriter::create(&dir.join(&final_file))?;
        for_each_source(ctx, input, &mut warnings, |item| {
            let mut doc = match item {
                Item::Doc(d) => d,
                Item::Drop(id, r) => {
                    ingest_stats.as_mut().expect("drops only come from ingest").record_drop(r, 0);
                    return drops.write(&drop_record(&id, r));
                }
            };
            let mut tokens = ctx.tokenizer.count(&doc.text);
            if let Some(s) = ingest_stats.as_mut() {
                s.record_keep(tokens, tokens);
            }
            for (stage, st) in ctx.doc_stages.iter().zip(stats.iter_mut()) {
                if let Some(r) = step(ctx, stage, &mut doc, &mut tokens, st)? {
                    return drops.write(&drop_record(&doc.id, r));
                }
            }
            out.write(&doc)
        })?;
        out.finish()?;
    } else {
        // one file per stage; each stage reads only its predecessor's file
        let mut current = input.to_path_buf();
        let mut pos = 0;
        if ctx.ingest {
            let path = dir.join("00-ingest.jsonl");
            let mut out = JsonlWriter::create(&path)?;
            for_each_source(ctx, input, &mut warnings, |item| match item {
                Item::Doc(d) => {
                    let t = ctx.tokenizer.count(&d.text);
                    ingest_stats.as_mut().expect("ingest").record_keep(t, t);
                    out.write(&d)
                }
                Item::Drop(id, r) => {
                    ingest_stats.as_mut().expect("ingest").record_drop(r, 0);
                    drops.write(&drop_record(&id, r))
                }
            })?;
            out.finish()?;
            current = path;
            pos = 1;
        }
        let mut name = String::new();
        for (k, (stage, st)) in ctx.doc_stages.iter().zip(stats.iter_mut()).enumerate() {
            name = format!("{:02}-{}.jsonl", pos + k, stage.kind().name());
            let path = dir.join(&name);
            let mut out = JsonlWriter::create(&path)?;
            let reader: Box<dyn Iterator<Item = Result<Document>>> = if k == 0 && !ctx.ingest {
                // validate raw input exactly as fused mode does
                Box::new(JsonlReader::<Document, _>::open(&current)?.map(|d| d.and_then(|d| d.validate().map(|_| d))))
            } else {
                Box::new(JsonlReader::open(&current)?)
            };
            for doc in reader {
                let mut doc = doc?;
                let mut tokens = ctx.tokenizer.count(&doc.text);
                match step(ctx, stage, &mut doc, &mut tokens, st)? {
                    None => out.write(&doc)?,
                    Some(r) => drops.write(&drop_record(&doc.id, r))?,
                }
            }
            out.finish()?;
            current = path;
        }
        final_file = name;
    }
    drops.finish()?;
    let all: Vec<StageStats> = ingest_stats.into_iter().chain(stats).collect();
    Ok(ShardDone {
        config_hash: ctx.hash.clone(),
        input: input.display().to_string(),
        final_file,
        stats: all,
        warnings,
    })
}

/// Phase 1 for one shard, honouring and writing the done marker.
fn process_shard(ctx: &Ctx, index: usize, input: &Path) -> Result<ShardDone> {
    let shards = ctx.out.join("shards");
    let dir = shards.join(shard_name(index));
    let marker = dir.join("done.json");
    if marker.is_file() {
        if let Ok(done) = read_json_file::<ShardDone>(&marker) {
            if done.config_hash == ctx.hash && done.input == input.display().to_string() && dir.join(&done.final_file).is_file() {
                log::info!("{}: already done, skipping", shard_name(index));
                return Ok(done);
            }
        }
    }
    let tmp = shards.join(format!("{}.partial", shard_name(index)));
    remove_dir_if_exists(&tmp)?;
    fs::create_dir_all(&tmp).map_err(|e| Error::at_path(&tmp, e))?;
    match process_shard_into(ctx, input, &tmp) {
        Ok(done) => {
            write_json_file(&tmp.join("done.json"), &done)?;
            remove_dir_if_exists(&dir)?;
            fs::rename(&tmp, &dir).map_err(|e| Error::at_path(&dir, e))?;
            Ok(done)
        }
        Err(e) => {
            // a half-written shard must not look resumable
            let _ = fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

struct Routed {
    dedup: Option<StageStats>,
    split: Option<crate::split::SplitReport>,
    ids: Vec<String>,
}

/// Phase 3 for one shard: duplicate removal, split routing, final files.
fn route_shard(ctx: &Ctx, index: usize, done: &ShardDone, removed: Option<&BTreeSet<u32>>) -> Result<Routed> {
    let dir = ctx.out.join("shards").join(shard_name(index));
    let name = format!("{}.jsonl", shard_name(index));
    // collected and sorted by id so fused and staged runs write identical files
    let mut drops: Vec<DropRecord> =
        JsonlReader::<DropRecord, _>::open(&dir.join("drops.jsonl"))?.collect::<Result<_>>()?;
    let mut dedup_stats = ctx.dedup.map(|_| StageStats::new(StageKind::Dedup.name()));
    let mut survivors = Vec::new();
    for (rec, doc) in JsonlReader::<Document, _>::open(&dir.join(&done.final_file))?.enumerate() {
        let mut doc = doc?;
        let tokens = ctx.tokenizer.count(&doc.text);
        if let Some(st) = dedup_stats.as_mut() {
            if removed.is_some_and(|r| r.contains(&(rec as u32))) {
                st.record_drop(Reason::DedupNearDuplicate, tokens);
                drops.push(drop_record(&doc.id, Reason::DedupNearDuplicate));
                continue;
            }
            st.record_keep(tokens, tokens);
        }
        doc.annotate(CONFIG_HASH_KEY, ctx.hash.as_str());
        survivors.push(doc);
    }
    let ids: Vec<String> = survivors.iter().map(|d| d.id.clone()).collect();

    let write_sorted = |path: PathBuf, mut docs: Vec<Document>| -> Result<()> {
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut w = JsonlWriter::create(&path)?;
        for d in &docs {
            w.write(d)?;
        }
        w.finish().map(|_| ())
    };

    let split = match &ctx.split {
        None => {
            write_sorted(ctx.out.join("output").join(&name), survivors)?;
            None
        }
        Some(plan) => {
            let assigned = RefCell::new(Vec::new());
            let mut routed: BTreeMap<QualitySplit, Vec<Document>> = BTreeMap::new();
            let report = materialize_splits(
                survivors,
                |d| {
                    let q = plan.assign(d);
                    assigned.borrow_mut().push((d.id.clone(), q));
                    q
                },
                &plan.cfg.selected,
                &ctx.tokenizer,
                |q, d| {
                    routed.entry(q).or_default().push(d.clone());
                    Ok(())
                },
            )?;
            for (id, q) in assigned.into_inner() {
                if !plan.cfg.selected.contains(&q) {
                    drops.push(drop_record(&id, q.reason()));
                }
            }
            for q in &plan.cfg.selected {
                write_sorted(ctx.out.join("splits").join(q.name()).join(&name), routed.remove(q).unwrap_or_default())?;
            }
            if let Some(quarantined) = routed.remove(&QualitySplit::Unscored) {
                write_sorted(ctx.out.join("splits").join(QualitySplit::Unscored.name()).join(&name), quarantined)?;
            }
            Some(report)
        }
    };
    drops.sort_by(|a, b| a.id.cmp(&b.id));
    let mut drop_out = JsonlWriter::create(&ctx.out.join("drops").join(&name))?;
    for d in &drops {
        drop_out.write(d)?;
    }
    drop_out.finish()?;
    Ok(Routed { dedup: dedup_stats, split, ids })
}

/// Runs the configured chain. Config problems are reported before any input
/// is read; a failing shard leaves no partial output and the run can be
/// restarted, reusing shards that finished.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let started = Instant::now();
    let resolved = cfg.resolve()?;
    let hash = resolved.hash();
    let tokenizer = Tokenizer::new(&resolved.tokenizer)?;
    let doc_stages: Vec<DocStage> = resolved
        .stages
        .iter()
        .filter_map(|s| DocStage::prepare(s).transpose())
        .collect::<Result<_>>()?;
    let dedup = resolved.stages.iter().find_map(|s| match s {
        StageSettings::Dedup(c) => Some(c),
        _ => None,
    });
    let split = resolved
        .stages
        .iter()
        .find_map(|s| match s {
            StageSettings::Split(c) => Some(c.clone()),
            _ => None,
        })
        .map(|c| -> Result<SplitPlan> {
            let table = c.scores.as_deref().map(|p| QualityScoreTable::load(p, &c.source_name)).transpose()?;
            let stop_words = resolved
                .stages
                .iter()
                .find_map(|s| match s {
                    StageSettings::GopherQuality(g) => Some(g.stop_words.clone()),
                    _ => None,
                })
                .unwrap_or_else(|| GopherQualityConfig::default().stop_words);
            Ok(SplitPlan { cfg: c, table, stop_words })
        })
        .transpose()?;
    let inputs = cfg.input_files()?;
    let out = cfg.output_path();
    fs::create_dir_all(&out).map_err(|e| Error::at_path(&out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;

    let ctx = Ctx {
        hash: hash.clone(),
        out: out.clone(),
        fused: cfg.fused,
        ingest: resolved.stages.first() == Some(&StageSettings::Ingest),
        doc_stages,
        tokenizer,
        dedup,
        split,
        sort_run_records: cfg.sort_run_records,
    };

    // phase 1: every shard runs to completion or failure independently
    let results: Vec<Result<ShardDone>> =
        pool.install(|| inputs.par_iter().enumerate().map(|(i, p)| process_shard(&ctx, i, p)).collect());
    let mut done = Vec::with_capacity(results.len());
    for r in results {
        done.push(r?);
    }

    // phase 2: corpus-wide duplicates
    let mut warnings: Vec<String> = done.iter().flat_map(|d| d.warnings.iter().cloned()).collect();
    let scan = match ctx.dedup {
        Some(dcfg) => {
            let shards: Vec<CorpusShard> = done
                .iter()
                .enumerate()
                .map(|(i, d)| CorpusShard {
                    index: i as u32,
                    path: out.join("shards").join(shard_name(i)).join(&d.final_file),
                    collection: dedup_phase::collection_of(Path::new(&d.input)),
                })
                .collect();
            let work = out.join("dedup");
            remove_dir_if_exists(&work)?;
            let scan = pool.install(|| find_duplicates(&shards, dcfg, &ctx.tokenizer, &work, ctx.sort_run_records))?;
            let mut w = JsonlWriter::create(&work.join("clusters.jsonl"))?;
            for c in &scan.clusters {
                w.write::<DuplicateCluster>(c)?;
            }
            w.finish()?;
            Some(scan)
        }
        None => None,
    };

    // phase 3: routing and final outputs
    for d in ["output", "splits", "drops"] {
        remove_dir_if_exists(&out.join(d))?;
    }
    let routed: Vec<Result<Routed>> = pool.install(|| {
        done.par_iter()
            .enumerate()
            .map(|(i, d)| route_shard(&ctx, i, d, scan.as_ref().map(|s| &s.removed[i])))
            .collect()
    });
    let routed = routed.into_iter().collect::<Result<Vec<_>>>()?;
    if scan.is_none() {
        let mut ids: Vec<&str> = routed.iter().flat_map(|r| r.ids.iter().map(String::as_str)).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::data(format!("document id `{}` occurs more than once", w[0])));
        }
    }

    // report, in config order
    let mut stages = Vec::new();
    let kinds = resolved.kinds();
    let per_doc = kinds.iter().filter(|k| !k.is_global()).count();
    for (k, kind) in kinds.iter().enumerate().take(per_doc) {
        let mut acc = StageStats::new(kind.name());
        for d in &done {
            acc = merge_stats(&acc, &d.stats[k])?;
        }
        stages.push(acc);
    }
    if ctx.dedup.is_some() {
        let mut acc = StageStats::new(StageKind::Dedup.name());
        for r in &routed {
            acc = merge_stats(&acc, r.dedup.as_ref().expect("dedup stats"))?;
        }
        stages.push(acc);
    }
    let mut splits = None;
    if let Some(plan) = &ctx.split {
        let mut acc = StageStats::new(StageKind::Split.name());
        let mut totals: BTreeMap<QualitySplit, SplitTotals> = BTreeMap::new();
        for r in &routed {
            let rep = r.split.as_ref().expect("split report");
            acc = merge_stats(&acc, &rep.stats)?;
            for (q, t) in &rep.per_split {
                let e = totals.entry(*q).or_insert(SplitTotals { written: t.written, ..Default::default() });
                e.docs += t.docs;
                e.tokens += t.tokens;
            }
        }
        if totals.is_empty() {
            for q in QualitySplit::ALL {
                let written = plan.cfg.selected.contains(&q) || q == QualitySplit::Unscored;
                totals.insert(q, SplitTotals { written, ..Default::default() });
            }
        }
        stages.push(acc);
        splits = Some(totals);
        if plan.table.is_none() {
            warnings.push(format!("split scores come from the {FALLBACK_SOURCE}"));
        }
    }
    let report = RunReport {
        run_id: resolved.run_id.clone(),
        config_hash: hash,
        accounting: Accounting::from_stages(&stages),
        stages,
        wall_time_secs: started.elapsed().as_secs_f64(),
        warnings,
        shards: done.len() as u64,
        dedup_clusters: scan.as_ref().map(|s| s.clusters.len() as u64),
        split_source: ctx.split.as_ref().map(|p| p.source().to_string()),
        split_thresholds: ctx.split.as_ref().map(|p| p.cfg.thresholds),
        splits,
    };
    write_json_file(&out.join("report.json"), &report)?;
    Ok(report)
}
