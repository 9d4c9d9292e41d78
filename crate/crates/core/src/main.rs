//! `corpus-forge`: every stage as a subcommand over JSONL files, plus the
//! config-driven `run`.

mod cli;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "corpus-forge", version, about = "Curate web archives into pretraining splits and SFT mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Outputs shared by the single-stage subcommands.
#[derive(Args, Clone)]
pub(crate) struct Outputs {
    /// Write one `{id, stage, reason}` line per dropped document here.
    #[arg(long)]
    drops: Option<PathBuf>,
    /// Write the stage report (JSON) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline config end to end.
    Run {
        config: PathBuf,
        /// Worker threads; overrides the config.
        #[arg(long, env = "CORPUS_FORGE_WORKERS")]
        workers: Option<usize>,
        /// Keep per-document stages in memory instead of per-stage files.
        #[arg(long)]
        fused: bool,
    },
    /// Check a pipeline config without reading any input.
    ValidateConfig { config: PathBuf },
    /// Convert WARC files (optionally gzipped) into document JSONL.
    Ingest {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run per-document stages over document JSONL.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated stage names, in order.
        #[arg(long, value_delimiter = ',', default_value = "url,language,gopher_repetition,gopher_quality,fineweb_quality")]
        stages: Vec<String>,
        /// TOML file with stage sections (a pipeline config works too).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Repair mojibake and redact e-mails, phones and public IPs.
    Pii {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Near-duplicate removal across document JSONL files.
    Dedup {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Receives clusters.jsonl and one deduplicated file per input.
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Only write the cluster report; inputs and outputs are untouched.
        #[arg(long)]
        dry_run: bool,
        #[arg(long, env = "CORPUS_FORGE_WORKERS", default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Bucket documents into high/medium/low quality splits.
    Split {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Receives `<split>/<input file name>`.
        #[arg(long)]
        output_dir: PathBuf,
        /// JSONL of `{id, score}` or `{id, label}`.
        #[arg(long, conflicts_with = "fallback")]
        scores: Option<PathBuf>,
        /// Name of the scorer that produced `--scores`.
        #[arg(long, default_value = "external")]
        source_name: String,
        /// Score with the built-in heuristic (fixtures and smoke tests only).
        #[arg(long)]
        fallback: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Clean SFT entries: traces, self-reference, quality, length, prompt dedup, unboxing.
    Posttrain {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// TOML field map for rows that are not already SFT entries.
        #[arg(long)]
        field_map: Option<PathBuf>,
        /// Source name for adapted rows (default: input file stem).
        #[arg(long)]
        source: Option<String>,
        /// TOML with a `[posttrain]` table and optionally `[tokenizer]`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        min_quality: Option<f64>,
        #[arg(long)]
        max_tokens: Option<u64>,
        #[arg(long)]
        unbox_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Leave reasoning traces in place.
        #[arg(long)]
        keep_traces: bool,
        /// Keep every entry even when prompts repeat.
        #[arg(long)]
        no_prompt_dedup: bool,
        #[command(flatten)]
        out: Outputs,
    },
    /// Compose a token-proportional SFT mixture from a TOML spec.
    Mix {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// TOML with a `[tokenizer]` table.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Merge and print stage reports.
    Stats {
        #[arg(required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        /// Print the merged stages as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Train character n-gram language profiles.
    TrainLang {
        /// Tab-separated `lang<TAB>text` lines; the built-in corpora when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = corpus_forge::filters::lang::DEFAULT_SMOOTHING)]
        smoothing: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Cli::parse();
    match cli::dispatch(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
