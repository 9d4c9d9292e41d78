//! Token-proportional mixture composition with largest-deficit-first
//! scheduling.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::SftEntry;
use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::model::Tokenizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSource {
    pub name: String,
    pub proportion: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    #[serde(rename = "source")]
    pub sources: Vec<MixtureSource>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Token budget; when absent (or too large for the sources) the largest
    /// budget all sources can honour is used.
    #[serde(default)]
    pub budget_tokens: Option<u64>,
}

fn default_tolerance() -> f64 {
    0.01
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::config("mixture has no sources"));
        }
        let mut names = BTreeSet::new();
        for s in &self.sources {
            if !names.insert(s.name.as_str()) {
                return Err(Error::config(format!("mixture source `{}` declared twice", s.name)));
            }
            if !(s.proportion > 0.0 && s.proportion <= 1.0) {
                return Err(Error::config(format!("mixture source `{}`: proportion {} not in (0, 1]", s.name, s.proportion)));
            }
        }
        let sum: f64 = self.sources.iter().map(|s| s.proportion).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::config(format!("mixture proportions sum to {sum}, not 1")));
        }
        if !(0.0..1.0).contains(&self.tolerance) {
            return Err(Error::config(format!("mixture tolerance {} not in [0, 1)", self.tolerance)));
        }
        Ok(())
    }

    /// Parses TOML; relative source paths are resolved against `base`.
    pub fn from_toml(body: &str, base: &Path) -> Result<Self> {
        let mut spec: MixtureSpec =
            toml::from_str(body).map_err(|e| Error::config(format!("mixture spec: {e}")))?;
        for s in &mut spec.sources {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::from_toml(&body, path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub name: String,
    pub target_proportion: f64,
    pub achieved_proportion: f64,
    pub target_tokens: f64,
    pub tokens: u64,
    pub entries: u64,
    pub available_tokens: u64,
    pub available_entries: u64,
    /// `limiting`: this source's size capped the budget; `exhausted`: every
    /// entry was used.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub requested_budget: Option<u64>,
    pub effective_budget: f64,
    /// Set when the requested budget could not be met and every target was
    /// scaled down proportionally.
    pub rescaled: bool,
    pub total_tokens: u64,
    pub total_entries: u64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub sources: Vec<SourceReport>,
}

/// Reads every source file and composes the mixture.
pub fn compose_mixture(
    spec: &MixtureSpec,
    tokenizer: &Tokenizer,
    emit: impl FnMut(&SftEntry) -> Result<()>,
) -> Result<MixtureReport> {
    spec.validate()?;
    let mut sources = Vec::with_capacity(spec.sources.len());
    for s in &spec.sources {
        let entries: Vec<SftEntry> = read_jsonl(&s.path)?;
        sources.push(entries);
    }
    compose_mixture_from(spec, sources, tokenizer, emit)
}

/// Emits entries so that each source's token share converges on its target
/// proportion. At every step the source furthest below its target share of
/// what has been emitted so far goes next (ties broken by a seeded hash of
/// the source name); a source stops once it reaches its target tokens.
/// Entries of a source are taken in file order.
pub fn compose_mixture_from(
    spec: &MixtureSpec,
    sources: Vec<Vec<SftEntry>>,
    tokenizer: &Tokenizer,
    mut emit: impl FnMut(&SftEntry) -> Result<()>,
) -> Result<MixtureReport> {
    spec.validate()?;
    if sources.len() != spec.sources.len() {
        return Err(Error::contract("one entry list per mixture source is required"));
    }
    let tokens: Vec<Vec<u64>> = sources
        .iter()
        .map(|entries| entries.iter().map(|e| e.count_tokens(tokenizer)).collect())
        .collect();
    let available: Vec<u64> = tokens.iter().map(|t| t.iter().sum()).collect();
    for (s, &avail) in spec.sources.iter().zip(&available) {
        if avail == 0 {
            return Err(Error::config(format!("mixture source `{}` has no entries (or no tokens)", s.name)));
        }
    }
    let capacity = spec
        .sources
        .iter()
        .zip(&available)
        .map(|(s, &a)| a as f64 / s.proportion)
        .fold(f64::INFINITY, f64::min);
    let budget = match spec.budget_tokens {
        Some(b) => (b as f64).min(capacity),
        None => capacity,
    };
    let rescaled = spec.budget_tokens.is_some_and(|b| b as f64 > capacity);
    let targets: Vec<f64> = spec.sources.iter().map(|s| s.proportion * budget).collect();
    let tie: Vec<u64> = spec.sources.iter().map(|s| xxh3_64_with_seed(s.name.as_bytes(), spec.seed)).collect();

    let n = sources.len();
    let mut next = vec![0usize; n];
    let mut emitted = vec![0u64; n];
    let mut total = 0u64;
    loop {
        let pick = (0..n)
            .filter(|&i| next[i] < sources[i].len() && (emitted[i] as f64) < targets[i])
            .max_by(|&a, &b| {
                // deficit relative to the share of what is emitted so far,
                // scaled by the target so small sources are not starved
                let d = |i: usize| (spec.sources[i].proportion * (total as f64 + 1.0) - emitted[i] as f64) / spec.sources[i].proportion;
                d(a).total_cmp(&d(b)).then_with(|| tie[b].cmp(&tie[a]))
            });
        let Some(i) = pick else { break };
        emit(&sources[i][next[i]])?;
        emitted[i] += tokens[i][next[i]];
        total += tokens[i][next[i]];
        next[i] += 1;
    }

    let mut within = true;
    let reports: Vec<SourceReport> = (0..n)
        .map(|i| {
            let s = &spec.sources[i];
            let achieved = if total == 0 { 0.0 } else { emitted[i] as f64 / total as f64 };
            if (achieved - s.proportion).abs() > spec.tolerance {
                within = false;
            }
            let mut flags = Vec::new();
            if (available[i] as f64 / s.proportion - capacity).abs() <= f64::EPSILON * capacity && budget >= capacity {
                flags.push("limiting".to_string());
            }
            if next[i] == sources[i].len() {
                flags.push("exhausted".to_string());
            }
            SourceReport {
                name: s.name.clone(),
                target_proportion: s.proportion,
                achieved_proportion: achieved,
                target_tokens: targets[i],
                tokens: emitted[i],
                entries: next[i] as u64,
                available_tokens: available[i],
                available_entries: sources[i].len() as u64,
                flags,
            }
        })
        .collect();
    Ok(MixtureReport {
        requested_budget: spec.budget_tokens,
        effective_budget: budget,
        rescaled,
        total_tokens: total,
        total_entries: next.iter().sum::<usize>() as u64,
        tolerance: spec.tolerance,
        within_tolerance: within,
        sources: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TokenizerSpec;
    use crate::posttrain::{Message, Role};

    fn entries(source: &str, n: usize, words: usize) -> Vec<SftEntry> {
        (0..n)
            .map(|i| SftEntry {
                id: format!("{source}-{i}"),
                source: source.into(),
                messages: vec![
                    Message::new(Role::User, "pergunta"),
                    Message::new(Role::Assistant, vec!["palavra"; words - 1].join(" ")),
                ],
                language: "por".into(),
                quality_score: None,
                token_count: words as u64,
            })
            .collect()
    }

    fn spec(props: &[(&str, f64)], budget: Option<u64>) -> MixtureSpec {
        MixtureSpec {
            sources: props
                .iter()
                .map(|(n, p)| MixtureSource { name: n.to_string(), proportion: *p, path: PathBuf::new() })
                .collect(),
            tolerance: 0.01,
            seed: 1,
            budget_tokens: budget,
        }
    }

    fn tok() -> Tokenizer {
        Tokenizer::new(&TokenizerSpec::whitespace()).unwrap()
    }

    #[test]
    fn seventy_five_twenty_five() {
        let s = spec(&[("a", 0.75), ("b", 0.25)], Some(10_000));
        let mut order = Vec::new();
        let rep = compose_mixture_from(&s, vec![entries("a", 1000, 20), entries("b", 1000, 20)], &tok(), |e| {
            order.push(e.id.clone());
            Ok(())
        })
        .unwrap();
        assert!(rep.within_tolerance, "{rep:?}");
        assert!(!rep.rescaled);
        let sum: f64 = rep.sources.iter().map(|r| r.achieved_proportion).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        // interleaved, not one source after the other
        assert!(order[..8].iter().any(|id| id.starts_with("b-")));
    }

    #[test]
    fn single_source_is_verbatim() {
        let src = entries("only", 5, 3);
        let s = spec(&[("only", 1.0)], None);
        let mut out = Vec::new();
        compose_mixture_from(&s, vec![src.clone()], &tok(), |e| {
            out.push(e.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(out, src);
    }

    #[test]
    fn oversized_budget_is_rescaled() {
        let s = spec(&[("a", 0.5), ("b", 0.5)], Some(1_000_000));
        let rep = compose_mixture_from(&s, vec![entries("a", 10, 10), entries("b", 100, 10)], &tok(), |_| Ok(())).unwrap();
        assert!(rep.rescaled);
        assert!(rep.sources[0].flags.contains(&"limiting".to_string()));
        assert_eq!(rep.sources[0].tokens, rep.sources[1].tokens);
    }

    #[test]
    fn spec_errors() {
        assert!(spec(&[("a", 0.5), ("a", 0.5)], None).validate().is_err());
        assert!(spec(&[("a", 0.5), ("b", 0.4)], None).validate().is_err());
        let s = spec(&[("a", 0.5), ("b", 0.5)], None);
        assert!(matches!(compose_mixture_from(&s, vec![entries("a", 3, 3), vec![]], &tok(), |_| Ok(())), Err(Error::Config(_))));
        let t = MixtureSpec::from_toml(
            "seed = 3\n[[source]]\nname = \"x\"\nproportion = 1.0\npath = \"x.jsonl\"\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(t.sources[0].path, PathBuf::from("/data/x.jsonl"));
        assert_eq!(t.tolerance, 0.01);
    }
}
