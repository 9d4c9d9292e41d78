use std::path::PathBuf;
use std::process::ExitCode;

use corpus_forge_fixtures::{generate_fixture, FixtureKind, FixtureSpec};

const USAGE: &str = "usage: forge-fixtures <kind> <size> <seed> <out-dir>

kinds: warc-minimal, portuguese-paragraphs, repetition-text, mixed-documents,
       pii-cases, sft-entries, web-crawl, overlap-pairs:<jaccard>";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [kind, size, seed, dir] = args.as_slice() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let (Some(kind), Ok(size), Ok(seed)) = (FixtureKind::parse(kind), size.parse(), seed.parse()) else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    match generate_fixture(&FixtureSpec { kind, size, seed }, &PathBuf::from(dir)) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if let Some(j) = out.achieved_jaccard {
                println!("achieved jaccard: {j}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("forge-fixtures: {e}");
            ExitCode::FAILURE
        }
    }
}
