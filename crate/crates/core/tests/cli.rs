use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use corpus_forge::merge_stats;
use corpus_forge::pipeline::merge_stage_lists;
use corpus_forge::StageStats;
use corpus_forge_fixtures::{generate_fixture, FixtureKind, FixtureSpec};
use serde_json::Value;
use tempfile::TempDir;

fn forge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corpus-forge"))
        .args(args)
        .current_dir(dir)
        .env_remove("CORPUS_FORGE_WORKERS")
        .output()
        .unwrap()
}

fn error_report(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("JSON error on stderr");
    serde_json::from_str(line).unwrap()
}

fn fixture(dir: &Path, kind: FixtureKind, size: usize, seed: u64) {
    generate_fixture(&FixtureSpec { kind, size, seed }, dir).unwrap();
}

#[test]
fn validate_config_rejects_inconsistent_banding() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("bad.toml"),
        "run_id = \"x\"\ninput = []\noutput_dir = \"out\"\nstages = [\"dedup\"]\n[dedup]\nnum_hashes = 112\nbands = 10\nrows_per_band = 8\n",
    )
    .unwrap();
    let out = forge(tmp.path(), &["validate-config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_report(&out);
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn usage_errors_exit_two_and_data_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(forge(tmp.path(), &["no-such-command"]).status.code(), Some(2));
    fs::write(tmp.path().join("docs.jsonl"), "{not json}\n").unwrap();
    let out = forge(tmp.path(), &["filter", "--input", "docs.jsonl", "--output", "out.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_report(&out)["exit_code"], 1);
}

#[test]
fn run_validate_and_stats_agree() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), FixtureKind::WebCrawl, 60, 2);
    fs::write(
        tmp.path().join("run.toml"),
        format!(
            "run_id = \"cli\"\ninput = [\"crawl/*.warc.gz\"]\noutput_dir = \"out\"\n[embargo]\nprocessing_date = \"{}\"\n[split]\nscores = \"scores.jsonl\"\n",
            corpus_forge_fixtures::corpus::PROCESSING_DATE
        ),
    )
    .unwrap();
    let v = forge(tmp.path(), &["validate-config", "run.toml"]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    let r = forge(tmp.path(), &["run", "run.toml", "--workers", "2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["accounting"]["balanced"], true);

    let s = forge(tmp.path(), &["stats", "--json", "out/report.json", "out/report.json"]);
    assert!(s.status.success());
    let merged: Value = serde_json::from_slice(&s.stdout).unwrap();
    let stages: Vec<StageStats> = serde_json::from_value(report["stages"].clone()).unwrap();
    let doubled = merge_stage_lists([stages.as_slice(), stages.as_slice()]).unwrap();
    let got: Vec<StageStats> = serde_json::from_value(merged["stages"].clone()).unwrap();
    assert_eq!(got, doubled);
    for (g, s) in got.iter().zip(&stages) {
        assert_eq!(*g, merge_stats(s, s).unwrap());
    }
}

#[test]
fn dedup_dry_run_leaves_inputs_alone() {
    let tmp = TempDir::new().unwrap();
    let unique = corpus_forge_fixtures::text::portuguese_paragraphs(30, 6);
    let docs = (0..30)
        .map(|i| {
            let text = if i % 3 == 0 { "o mesmo texto repetido sobre a estação de comboios de Lisboa e o rio Tejo".to_string() } else { unique[i].clone() };
            serde_json::json!({"id": format!("d{i:02}"), "text": text}).to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    fs::write(tmp.path().join("docs.jsonl"), &docs).unwrap();
    let out = forge(tmp.path(), &["dedup", "--input", "docs.jsonl", "--output-dir", "dd", "--dry-run", "--report", "rep.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(tmp.path().join("docs.jsonl")).unwrap(), docs);
    assert!(!tmp.path().join("dd/docs.jsonl").exists());
    let clusters = fs::read_to_string(tmp.path().join("dd/clusters.jsonl")).unwrap();
    assert_eq!(clusters.lines().count(), 1);
    let rep: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("rep.json")).unwrap()).unwrap();
    assert_eq!(rep["details"]["would_remove"], 9);

    let real = forge(tmp.path(), &["dedup", "--input", "docs.jsonl", "--output-dir", "dd", "--drops", "drops.jsonl"]);
    assert!(real.status.success());
    assert_eq!(fs::read_to_string(tmp.path().join("dd/docs.jsonl")).unwrap().lines().count(), 21);
    assert_eq!(fs::read_to_string(tmp.path().join("drops.jsonl")).unwrap().lines().count(), 9);
}

#[test]
fn ingest_filter_pii_chain() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), FixtureKind::WebCrawl, 40, 8);
    let crawl: Vec<String> = (0..4).map(|i| format!("crawl/crawl-{i:03}.warc.gz")).collect();
    let mut args = vec!["ingest", "--input"];
    args.extend(crawl.iter().map(String::as_str));
    args.extend(["--output", "docs.jsonl", "--drops", "ingest-drops.jsonl"]);
    let out = forge(tmp.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let docs = fs::read_to_string(tmp.path().join("docs.jsonl")).unwrap().lines().count();
    let drops = fs::read_to_string(tmp.path().join("ingest-drops.jsonl")).unwrap().lines().count();
    assert_eq!(docs + drops, 40);

    let out = forge(
        tmp.path(),
        &["filter", "--input", "docs.jsonl", "--output", "kept.jsonl", "--stages", "extract,language", "--report", "f.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = forge(tmp.path(), &["pii", "--input", "kept.jsonl", "--output", "clean.jsonl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let clean = fs::read_to_string(tmp.path().join("clean.jsonl")).unwrap();
    assert!(!clean.contains("@exemplo.pt"));
    assert!(clean.contains("<EMAIL>"));
}

#[test]
fn posttrain_and_mix() {
    let tmp = TempDir::new().unwrap();
    fixture(tmp.path(), FixtureKind::SftEntries, 200, 1);
    let out = forge(tmp.path(), &["posttrain", "--input", "sft.jsonl", "--output", "sft-clean.jsonl", "--report", "p.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let clean = fs::read_to_string(tmp.path().join("sft-clean.jsonl")).unwrap();
    assert!(!clean.contains("<think>"));
    assert!(!clean.to_lowercase().contains("como modelo de linguagem"));

    for (name, tokens) in [("a", 3_000u64), ("b", 9_000)] {
        let (rows, _) = corpus_forge_fixtures::sft::mixture_source(name, tokens, 4);
        let body: String = rows.iter().map(|r| format!("{r}\n")).collect();
        fs::write(tmp.path().join(format!("{name}.jsonl")), body).unwrap();
    }
    fs::write(
        tmp.path().join("mix.toml"),
        "budget_tokens = 8000\n[[source]]\nname = \"a\"\nproportion = 0.25\npath = \"a.jsonl\"\n[[source]]\nname = \"b\"\nproportion = 0.75\npath = \"b.jsonl\"\n",
    )
    .unwrap();
    let out = forge(tmp.path(), &["mix", "--spec", "mix.toml", "--output", "mix.jsonl", "--report", "mix.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("mix.json")).unwrap()).unwrap();
    assert_eq!(rep["within_tolerance"], true, "{rep}");
}
