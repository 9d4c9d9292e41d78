//! Subcommand bodies. Each one reads and writes the JSONL interchange so
//! stages compose through files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use corpus_forge::dedup::DuplicateCluster;
use corpus_forge::filters::lang::{save_profiles, train_lang_profile};
use corpus_forge::filters::GopherQualityConfig;
use corpus_forge::ingest::{ingest_warc_file, Ingested};
use corpus_forge::io::{write_json_file, JsonlReader, JsonlWriter};
use corpus_forge::model::Tokenizer;
use corpus_forge::pipeline::{
    find_duplicates, merge_stage_lists, run_pipeline, Accounting, ChainOutcome, CorpusShard, DocChain, DropRecord,
    PipelineConfig, StageKind, StageSettings,
};
use corpus_forge::posttrain::{compose_mixture, FieldMap, MixtureSpec, SftConfig, SftEntry, SftProcessor};
use corpus_forge::split::{assign_quality, fallback_score, materialize_splits, QualityScoreTable, QualitySplit};
use corpus_forge::{Document, Error, Reason, Result, StageStats};

use crate::{Command, Outputs};

/// What the single-stage subcommands write with `--report`; `stats` reads
/// it back like a run report.
#[derive(Debug, Serialize)]
struct StageReport {
    command: &'static str,
    stages: Vec<StageStats>,
    accounting: Accounting,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    details: Value,
}

pub(crate) fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, workers, fused } => run(&config, workers, fused),
        Command::ValidateConfig { config } => validate_config(&config),
        Command::Ingest { input, output, out } => ingest(&input, &output, &out),
        Command::Filter { input, output, stages, config, out } => {
            let kinds = stages.iter().map(|s| s.trim().parse()).collect::<Result<Vec<StageKind>>>()?;
            chain("filter", &kinds, &input, &output, config.as_deref(), &out)
        }
        Command::Pii { input, output, config, out } => chain("pii", &[StageKind::Pii], &input, &output, config.as_deref(), &out),
        Command::Dedup { input, output_dir, config, dry_run, workers, out } => {
            dedup(&input, &output_dir, config.as_deref(), dry_run, workers, &out)
        }
        Command::Split { input, output_dir, scores, source_name, fallback, config, out } => {
            split(&input, &output_dir, scores, &source_name, fallback, config.as_deref(), &out)
        }
        Command::Posttrain {
            input,
            output,
            field_map,
            source,
            config,
            min_quality,
            max_tokens,
            unbox_fraction,
            seed,
            keep_traces,
            no_prompt_dedup,
            out,
        } => {
            let mut cfg = sft_config(config.as_deref())?;
            if let Some(v) = min_quality {
                cfg.min_quality = v;
            }
            if let Some(v) = max_tokens {
                cfg.max_tokens = v;
            }
            if let Some(v) = unbox_fraction {
                cfg.unbox_fraction = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            cfg.strip_traces &= !keep_traces;
            cfg.dedup_prompts &= !no_prompt_dedup;
            posttrain(&input, &output, field_map.as_deref(), source, cfg, config.as_deref(), &out)
        }
        Command::Mix { spec, output, config, report } => mix(&spec, &output, config.as_deref(), report.as_deref()),
        Command::Stats { reports, json } => stats(&reports, json),
        Command::TrainLang { corpus, output, smoothing } => train_lang(corpus.as_deref(), &output, smoothing),
    }
}

fn run(config: &Path, workers: Option<usize>, fused: bool) -> Result<()> {
    let mut cfg = PipelineConfig::load(config)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.fused |= fused;
    let report = run_pipeline(&cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    print_table(&report.stages);
    println!(
        "config {}  in {}  out {}  dropped {}  balanced {}",
        &report.config_hash[..12],
        report.accounting.documents_in,
        report.accounting.documents_out,
        report.accounting.documents_dropped,
        report.accounting.balanced
    );
    Ok(())
}

fn validate_config(config: &Path) -> Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let resolved = cfg.resolve()?;
    let inputs = cfg.input_files()?;
    let names: Vec<&str> = resolved.kinds().iter().map(|k| k.name()).collect();
    println!("ok: {} stages ({}), {} input files, config hash {}", names.len(), names.join(" -> "), inputs.len(), resolved.hash());
    Ok(())
}

/// Writes the optional drops file and report, and a summary to stderr.
fn finish(command: &'static str, stages: Vec<StageStats>, warnings: Vec<String>, details: Value, out: &Outputs) -> Result<()> {
    for w in &warnings {
        log::warn!("{w}");
    }
    for s in &stages {
        eprintln!("{}: seen {} kept {} dropped {}", s.stage, s.seen, s.kept, s.dropped());
    }
    if let Some(p) = &out.report {
        let accounting = Accounting::from_stages(&stages);
        write_json_file(p, &StageReport { command, stages, accounting, warnings, details })?;
    }
    Ok(())
}

/// A drops sink that may be disabled.
struct Drops(Option<JsonlWriter>);

impl Drops {
    fn open(out: &Outputs) -> Result<Self> {
        Ok(Drops(out.drops.as_deref().map(JsonlWriter::create).transpose()?))
    }

    fn write(&mut self, id: &str, r: Reason) -> Result<()> {
        match &mut self.0 {
            Some(w) => w.write(&DropRecord {
                id: id.to_string(),
                stage: r.stage().to_string(),
                reason: r.code().to_string(),
            }),
            None => Ok(()),
        }
    }

    fn write_record(&mut self, d: &DropRecord) -> Result<()> {
        match &mut self.0 {
            Some(w) => w.write(d),
            None => Ok(()),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(w) = self.0 {
            w.finish()?;
        }
        Ok(())
    }
}

fn ingest(inputs: &[PathBuf], output: &Path, out: &Outputs) -> Result<()> {
    let tokenizer = Tokenizer::new(&Default::default())?;
    let mut stats = StageStats::new(StageKind::Ingest.name());
    let mut w = JsonlWriter::create(output)?;
    let mut drops = Drops::open(out)?;
    let mut warnings = Vec::new();
    for p in inputs {
        warnings.extend(ingest_warc_file(p, |item| match item {
            Ingested::Doc(d) => {
                let t = tokenizer.count(&d.text);
                stats.record_keep(t, t);
                w.write(&d)
            }
            Ingested::Drop { id, reason } => {
                stats.record_drop(reason, 0);
                drops.write(&id, reason)
            }
        })?);
    }
    w.finish()?;
    drops.finish()?;
    finish("ingest", vec![stats], warnings, Value::Null, out)
}

fn chain(command: &'static str, kinds: &[StageKind], input: &Path, output: &Path, config: Option<&Path>, out: &Outputs) -> Result<()> {
    let resolved = PipelineConfig::for_stages(kinds, config)?.resolve()?;
    let mut chain = DocChain::new(&resolved.stages, &resolved.tokenizer)?;
    let mut w = JsonlWriter::create(output)?;
    let mut drops = Drops::open(out)?;
    for doc in JsonlReader::<Document, _>::open(input)? {
        let doc = doc?;
        doc.validate()?;
        match chain.process(doc)? {
            ChainOutcome::Kept(d) => w.write(&d)?,
            ChainOutcome::Dropped(r) => drops.write_record(&r)?,
        }
    }
    w.finish()?;
    drops.finish()?;
    finish(command, chain.stats().to_vec(), Vec::new(), Value::Null, out)
}

fn output_names(inputs: &[PathBuf]) -> Result<Vec<String>> {
    let names: Vec<String> = inputs
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).ok_or_else(|| Error::config(format!("`{}` is not a file", p.display()))))
        .collect::<Result<_>>()?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::config(format!("two inputs are named `{dup}`; outputs would collide")));
    }
    Ok(names)
}

fn dedup(inputs: &[PathBuf], dir: &Path, config: Option<&Path>, dry_run: bool, workers: usize, out: &Outputs) -> Result<()> {
    let resolved = PipelineConfig::for_stages(&[StageKind::Dedup], config)?.resolve()?;
    let StageSettings::Dedup(cfg) = &resolved.stages[0] else { unreachable!("dedup stage resolves to dedup settings") };
    if workers == 0 {
        return Err(Error::config("workers must be at least 1"));
    }
    let names = output_names(inputs)?;
    let tokenizer = Tokenizer::new(&resolved.tokenizer)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::at_path(dir, e))?;
    let work = dir.join(".dedup-work");
    let shards = CorpusShard::from_paths(inputs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let scan = pool.install(|| find_duplicates(&shards, cfg, &tokenizer, &work, 1 << 20));
    let _ = std::fs::remove_dir_all(&work);
    let scan = scan?;
    let mut w = JsonlWriter::create(&dir.join("clusters.jsonl"))?;
    for c in &scan.clusters {
        w.write::<DuplicateCluster>(c)?;
    }
    w.finish()?;
    let details = serde_json::json!({
        "clusters": scan.clusters.len(),
        "documents": scan.docs,
        "would_remove": scan.removed_count(),
        "dry_run": dry_run,
    });
    if dry_run {
        eprintln!("dedup (dry run): {} clusters, {} of {} documents would be removed", scan.clusters.len(), scan.removed_count(), scan.docs);
        // no stage ran, so the report carries no stage statistics
        return finish("dedup", Vec::new(), Vec::new(), details, out);
    }
    let mut stats = StageStats::new(StageKind::Dedup.name());
    let mut drops = Drops::open(out)?;
    for ((shard, name), removed) in shards.iter().zip(&names).zip(&scan.removed) {
        let mut w = JsonlWriter::create(&dir.join(name))?;
        for (rec, doc) in JsonlReader::<Document, _>::open(&shard.path)?.enumerate() {
            let doc = doc?;
            let t = tokenizer.count(&doc.text);
            if removed.contains(&(rec as u32)) {
                stats.record_drop(Reason::DedupNearDuplicate, t);
                drops.write(&doc.id, Reason::DedupNearDuplicate)?;
            } else {
                stats.record_keep(t, t);
                w.write(&doc)?;
            }
        }
        w.finish()?;
    }
    drops.finish()?;
    finish("dedup", vec![stats], Vec::new(), details, out)
}

fn split(
    inputs: &[PathBuf],
    dir: &Path,
    scores: Option<PathBuf>,
    source_name: &str,
    fallback: bool,
    config: Option<&Path>,
    out: &Outputs,
) -> Result<()> {
    let mut pc = PipelineConfig::for_stages(&[StageKind::Split], config)?;
    if scores.is_some() || fallback {
        let section = pc.sections.entry("split".into()).or_insert_with(|| toml::Value::Table(Default::default()));
        let toml::Value::Table(t) = section else { return Err(Error::config("[split] must be a table")) };
        t.remove("scores");
        t.remove("fallback");
        match &scores {
            Some(p) => {
                let abs = std::env::current_dir().map_err(Error::Io)?.join(p);
                t.insert("scores".into(), toml::Value::String(abs.to_string_lossy().into_owned()));
                t.insert("source_name".into(), toml::Value::String(source_name.into()));
            }
            None => {
                t.insert("fallback".into(), toml::Value::Boolean(true));
            }
        }
    }
    let resolved = pc.resolve()?;
    let StageSettings::Split(cfg) = &resolved.stages[0] else { unreachable!("split stage resolves to split settings") };
    let tokenizer = Tokenizer::new(&resolved.tokenizer)?;
    let table = cfg.scores.as_deref().map(|p| QualityScoreTable::load(p, &cfg.source_name)).transpose()?;
    let stop_words = GopherQualityConfig::default().stop_words;
    let assign = |d: &Document| match &table {
        Some(t) => assign_quality(&d.id, t, &cfg.thresholds),
        None => cfg.thresholds.bucket(fallback_score(&d.text, &stop_words)),
    };
    let names = output_names(inputs)?;
    let mut writers: BTreeMap<QualitySplit, BTreeMap<usize, JsonlWriter>> = BTreeMap::new();
    let mut drops = Drops::open(out)?;
    let mut stats = StageStats::new(StageKind::Split.name());
    let mut per_split = BTreeMap::new();
    for (i, (p, name)) in inputs.iter().zip(&names).enumerate() {
        let docs = JsonlReader::<Document, _>::open(p)?.collect::<Result<Vec<_>>>()?;
        let unselected = std::cell::RefCell::new(Vec::new());
        let report = materialize_splits(docs, |d| {
            let q = assign(d);
            if q != QualitySplit::Unscored && !cfg.selected.contains(&q) {
                unselected.borrow_mut().push((d.id.clone(), q));
            }
            q
        }, &cfg.selected, &tokenizer, |q, d| {
            let per = writers.entry(q).or_default();
            if !per.contains_key(&i) {
                per.insert(i, JsonlWriter::create(&dir.join(q.name()).join(name))?);
            }
            per.get_mut(&i).expect("writer just created").write(d)
        })?;
        for (id, q) in unselected.into_inner() {
            drops.write(&id, q.reason())?;
        }
        stats = corpus_forge::merge_stats(&stats, &report.stats)?;
        for (q, t) in report.per_split {
            let e: &mut corpus_forge::split::SplitTotals = per_split.entry(q).or_default();
            e.docs += t.docs;
            e.tokens += t.tokens;
            e.written = t.written;
        }
    }
    for per in writers.into_values() {
        for w in per.into_values() {
            w.finish()?;
        }
    }
    drops.finish()?;
    let source = table.as_ref().map_or(corpus_forge::split::FALLBACK_SOURCE, |t| t.source_name.as_str());
    let mut warnings = Vec::new();
    if table.is_none() {
        warnings.push(format!("split scores come from the {source}"));
    }
    let details = serde_json::json!({ "source": source, "thresholds": cfg.thresholds, "splits": per_split });
    finish("split", vec![stats], warnings, details, out)
}

fn sft_config(config: Option<&Path>) -> Result<SftConfig> {
    let Some(p) = config else { return Ok(SftConfig::default()) };
    let body = std::fs::read_to_string(p).map_err(|e| Error::at_path(p, e))?;
    let mut t: toml::Table = toml::from_str(&body).map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
    match t.remove("posttrain") {
        Some(v) => v.try_into().map_err(|e| Error::config(format!("[posttrain]: {e}"))),
        None => Ok(SftConfig::default()),
    }
}

fn posttrain(
    input: &Path,
    output: &Path,
    field_map: Option<&Path>,
    source: Option<String>,
    cfg: SftConfig,
    config: Option<&Path>,
    out: &Outputs,
) -> Result<()> {
    let tokenizer = Tokenizer::new(&PipelineConfig::for_stages(&[], config)?.tokenizer)?;
    let map: Option<FieldMap> = field_map
        .map(|p| -> Result<FieldMap> {
            let body = std::fs::read_to_string(p).map_err(|e| Error::at_path(p, e))?;
            toml::from_str(&body).map_err(|e| Error::config(format!("field map {}: {e}", p.display())))
        })
        .transpose()?;
    let source = source.unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let mut proc = SftProcessor::new(cfg, &tokenizer)?;
    let mut w = JsonlWriter::create(output)?;
    let mut drops = Drops::open(out)?;
    for row in JsonlReader::<Value, _>::open(input)? {
        let row = row?;
        let entry: SftEntry = match &map {
            Some(m) => m.adapt(&row, &source)?,
            None => serde_json::from_value(row).map_err(|e| Error::data(format!("{}: not an SFT entry: {e}", input.display())))?,
        };
        let id = entry.id.clone();
        match proc.process(entry)? {
            Ok(e) => w.write(&e)?,
            Err(r) => drops.write(&id, r)?,
        }
    }
    w.finish()?;
    drops.finish()?;
    let details = serde_json::to_value(&proc.counters)?;
    finish("posttrain", vec![proc.stats.clone()], Vec::new(), details, out)
}

fn mix(spec: &Path, output: &Path, config: Option<&Path>, report: Option<&Path>) -> Result<()> {
    let spec = MixtureSpec::load(spec)?;
    let tokenizer = Tokenizer::new(&PipelineConfig::for_stages(&[], config)?.tokenizer)?;
    let mut w = JsonlWriter::create(output)?;
    let rep = compose_mixture(&spec, &tokenizer, |e| w.write(e))?;
    w.finish()?;
    for s in &rep.sources {
        eprintln!(
            "{:<24} target {:>8.4}%  achieved {:>8.4}%  tokens {:>10}  {}",
            s.name,
            s.target_proportion * 100.0,
            s.achieved_proportion * 100.0,
            s.tokens,
            s.flags.join(",")
        );
    }
    if !rep.within_tolerance {
        log::warn!("mixture shares are outside the ±{} tolerance", rep.tolerance);
    }
    if let Some(p) = report {
        write_json_file(p, &rep)?;
    }
    Ok(())
}

/// Stage lists from a run report, a single-stage report, a bare list of
/// stage stats or a single stage-stats object.
fn stage_list(path: &Path) -> Result<Vec<StageStats>> {
    let v: Value = corpus_forge::io::read_json_file(path)?;
    let list = match &v {
        Value::Object(o) if o.contains_key("stages") => o["stages"].clone(),
        Value::Object(_) => Value::Array(vec![v.clone()]),
        Value::Array(_) => v.clone(),
        _ => return Err(Error::data(format!("{}: not a stage report", path.display()))),
    };
    serde_json::from_value(list).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn stats(paths: &[PathBuf], json: bool) -> Result<()> {
    let lists = paths.iter().map(|p| stage_list(p)).collect::<Result<Vec<_>>>()?;
    let merged = merge_stage_lists(lists.iter().map(Vec::as_slice))?;
    if json {
        let out = serde_json::json!({ "stages": merged, "accounting": Accounting::from_stages(&merged) });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print_table(&merged);
    }
    Ok(())
}

fn print_table(stages: &[StageStats]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<20} {:>10} {:>10} {:>10} {:>14} {:>14}", "stage", "seen", "kept", "dropped", "tokens_in", "tokens_out");
    for s in stages {
        let _ = writeln!(
            out,
            "{:<20} {:>10} {:>10} {:>10} {:>14} {:>14}",
            s.stage,
            s.seen,
            s.kept,
            s.dropped(),
            s.tokens_in,
            s.tokens_out
        );
        for (reason, n) in &s.dropped_by_reason {
            let _ = writeln!(out, "  {reason:<40} {n:>10}");
        }
    }
}

fn train_lang(corpus: Option<&Path>, output: &Path, smoothing: f64) -> Result<()> {
    let profiles = match corpus {
        None => {
            let c = corpus_forge::filters::lang::builtin_corpus();
            train_lang_profile(c.iter().map(|(t, l)| (*t, *l)), smoothing)?
        }
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| Error::at_path(p, e))?;
            let mut pairs = Vec::new();
            for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
                let line = line.map_err(Error::Io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let (lang, text) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::data(format!("{}:{}: expected `lang<TAB>text`", p.display(), n + 1)))?;
                pairs.push((text.to_string(), lang.trim().to_string()));
            }
            train_lang_profile(pairs.iter().map(|(t, l)| (t.as_str(), l.as_str())), smoothing)?
        }
    };
    save_profiles(output, &profiles)?;
    eprintln!("trained {} profiles: {}", profiles.len(), profiles.iter().map(|p| p.language.as_str()).collect::<Vec<_>>().join(", "));
    Ok(())
}
