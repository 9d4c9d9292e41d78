//! Corpus-wide near-duplicate discovery over JSONL shards.
//!
//! Phase 1 signs every document and appends its band hashes to a per-shard
//! band index file (in parallel). Phase 2 externally sorts all band files,
//! unions documents that share a band bucket and picks one survivor per
//! cluster. Document keys are `(shard position << 32) | record index`, so
//! no coordination between workers is needed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::dedup::{
    band_hash, choose_survivor, external_sort_groups, jaccard, shingle, BandIndexWriter, BandRecord, DedupConfig, DedupScope, DocMeta,
    DuplicateCluster, MinHasher, UnionFind,
};
use crate::error::{Error, Result};
use crate::io::JsonlReader;
use crate::model::{Document, Tokenizer};

/// One JSONL file of documents taking part in deduplication.
#[derive(Debug, Clone)]
pub struct CorpusShard {
    /// Stable shard number, used for survivor ordering.
    pub index: u32,
    pub path: PathBuf,
    /// Collection label for per-collection scope.
    pub collection: String,
}

impl CorpusShard {
    /// Shards for plain files: numbered in the given order, collection taken
    /// from the parent directory name.
    pub fn from_paths(paths: &[PathBuf]) -> Vec<CorpusShard> {
        paths
            .iter()
            .enumerate()
            .map(|(i, p)| CorpusShard { index: i as u32, path: p.clone(), collection: collection_of(p) })
            .collect()
    }
}

pub(crate) fn collection_of(p: &Path) -> String {
    p.parent()
        .and_then(|d| d.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Default)]
pub struct DuplicateScan {
    pub docs: u64,
    pub tokens: u64,
    /// Sorted by survivor id.
    pub clusters: Vec<DuplicateCluster>,
    /// Per shard (same order as the input slice), record indices of the
    /// documents to remove.
    pub removed: Vec<BTreeSet<u32>>,
    pub removed_tokens: u64,
}

impl DuplicateScan {
    pub fn removed_count(&self) -> u64 {
        self.removed.iter().map(|s| s.len() as u64).sum()
    }
}

struct Signed {
    ids: Vec<String>,
    tokens: Vec<u64>,
}

fn key(pos: usize, rec: usize) -> u64 {
    ((pos as u64) << 32) | rec as u64
}

fn unkey(k: u64) -> (usize, usize) {
    ((k >> 32) as usize, (k & 0xffff_ffff) as usize)
}

fn sign_shard(
    pos: usize,
    shard: &CorpusShard,
    cfg: &DedupConfig,
    hasher: &MinHasher,
    tokenizer: &Tokenizer,
    band_file: &Path,
) -> Result<Signed> {
    let scope_salt = match cfg.scope {
        DedupScope::Merged => None,
        DedupScope::PerCollection => Some(xxh3_64_with_seed(shard.collection.as_bytes(), cfg.seed)),
    };
    let mut w = BandIndexWriter::create(band_file)?;
    let mut out = Signed { ids: Vec::new(), tokens: Vec::new() };
    for (rec, doc) in JsonlReader::<Document, _>::open(&shard.path)?.enumerate() {
        let doc = doc?;
        if rec > u32::MAX as usize {
            return Err(Error::data(format!("{}: more than 2^32 documents in one shard", shard.path.display())));
        }
        let sh = shingle(&doc.text, cfg.shingle_n);
        // a document without words has nothing to match on
        if !sh.is_empty() {
            let sig = hasher.sign(&doc.id, &sh)?;
            for band in 0..cfg.bands {
                let mut h = band_hash(&sig.values, band, cfg.rows_per_band);
                if let Some(salt) = scope_salt {
                    let mut b = [0u8; 16];
                    b[..8].copy_from_slice(&h.to_le_bytes());
                    b[8..].copy_from_slice(&salt.to_le_bytes());
                    h = xxh3_64_with_seed(&b, band as u64);
                }
                w.append(BandRecord { band: band as u16, hash: h, doc: key(pos, rec) })?;
            }
        }
        out.tokens.push(tokenizer.count(&doc.text));
        out.ids.push(doc.id);
    }
    w.finish()?;
    Ok(out)
}

/// Shingle sets of the wanted documents, keyed by document key.
fn load_shingles(
    shards: &[CorpusShard],
    wanted: &BTreeSet<u64>,
    n: usize,
) -> Result<HashMap<u64, BTreeSet<String>>> {
    let per_shard: Vec<Result<Vec<(u64, BTreeSet<String>)>>> = shards
        .par_iter()
        .enumerate()
        .map(|(pos, shard)| {
            let lo = key(pos, 0);
            let hi = key(pos, u32::MAX as usize);
            if wanted.range(lo..=hi).next().is_none() {
                return Ok(Vec::new());
            }
            let mut out = Vec::new();
            for (rec, doc) in JsonlReader::<Document, _>::open(&shard.path)?.enumerate() {
                let k = key(pos, rec);
                if wanted.contains(&k) {
                    out.push((k, shingle(&doc?.text, n)));
                }
            }
            Ok(out)
        })
        .collect();
    let mut map = HashMap::new();
    for r in per_shard {
        map.extend(r?);
    }
    Ok(map)
}

/// Finds near-duplicate clusters across `shards`. Runs on the current rayon
/// pool; temporary files go under `work_dir`.
pub fn find_duplicates(
    shards: &[CorpusShard],
    cfg: &DedupConfig,
    tokenizer: &Tokenizer,
    work_dir: &Path,
    sort_run_records: usize,
) -> Result<DuplicateScan> {
    cfg.validate()?;
    let bands_dir = work_dir.join("bands");
    std::fs::create_dir_all(&bands_dir).map_err(|e| Error::at_path(&bands_dir, e))?;
    let hasher = MinHasher::new(cfg);
    let band_files: Vec<PathBuf> = (0..shards.len()).map(|i| bands_dir.join(format!("shard-{i:05}.bin"))).collect();
    let signed: Vec<Signed> = shards
        .par_iter()
        .enumerate()
        .map(|(pos, s)| sign_shard(pos, s, cfg, &hasher, tokenizer, &band_files[pos]))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let mut all_ids: Vec<&str> = signed.iter().flat_map(|s| s.ids.iter().map(String::as_str)).collect();
    all_ids.sort_unstable();
    if let Some(w) = all_ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::data(format!("document id `{}` occurs more than once", w[0])));
    }
    drop(all_ids);

    let mut offsets = Vec::with_capacity(signed.len());
    let mut total = 0usize;
    for s in &signed {
        offsets.push(total);
        total += s.ids.len();
    }
    let dense = |k: u64| {
        let (pos, rec) = unkey(k);
        offsets[pos] + rec
    };

    let mut uf = UnionFind::new(total);
    let mut candidates: BTreeSet<(u64, u64)> = BTreeSet::new();
    let verify = cfg.verify_threshold;
    external_sort_groups(&band_files, &work_dir.join("sort"), sort_run_records, |_, _, docs| {
        if docs.len() < 2 {
            return;
        }
        if verify.is_some() {
            for (i, &a) in docs.iter().enumerate() {
                for &b in &docs[i + 1..] {
                    candidates.insert((a, b));
                }
            }
        } else {
            for &d in &docs[1..] {
                uf.union(dense(docs[0]), dense(d));
            }
        }
    })?;
    if let Some(t) = verify {
        let wanted: BTreeSet<u64> = candidates.iter().flat_map(|&(a, b)| [a, b]).collect();
        let sets = load_shingles(shards, &wanted, cfg.shingle_n)?;
        for (a, b) in candidates {
            if jaccard(&sets[&a], &sets[&b]) >= t {
                uf.union(dense(a), dense(b));
            }
        }
    }
    for f in &band_files {
        let _ = std::fs::remove_file(f);
    }

    // dense index back to (shard position, record)
    let locate = |d: usize| {
        let pos = offsets.partition_point(|&o| o <= d) - 1;
        (pos, d - offsets[pos])
    };
    let mut scan = DuplicateScan {
        docs: total as u64,
        tokens: signed.iter().flat_map(|s| &s.tokens).sum(),
        removed: vec![BTreeSet::new(); shards.len()],
        ..Default::default()
    };
    for comp in uf.components().into_iter().filter(|c| c.len() > 1) {
        let located: Vec<(usize, usize)> = comp.iter().map(|&d| locate(d)).collect();
        let meta: BTreeMap<String, DocMeta> = located
            .iter()
            .map(|&(pos, rec)| {
                let m = DocMeta { shard_index: shards[pos].index as u64, record_index: rec as u64, tokens: signed[pos].tokens[rec] };
                (signed[pos].ids[rec].clone(), m)
            })
            .collect();
        let members: Vec<&str> = located.iter().map(|&(pos, rec)| signed[pos].ids[rec].as_str()).collect();
        let survivor = choose_survivor(&members, &meta, cfg.survivor_policy).to_string();
        for &(pos, rec) in &located {
            if signed[pos].ids[rec] != survivor {
                scan.removed[pos].insert(rec as u32);
                scan.removed_tokens += signed[pos].tokens[rec];
            }
        }
        let mut members: Vec<String> = members.into_iter().map(String::from).collect();
        members.sort();
        scan.clusters.push(DuplicateCluster { survivor, members });
    }
    scan.clusters.sort_by(|a, b| a.survivor.cmp(&b.survivor));
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::JsonlWriter;
    use crate::model::TokenizerSpec;

    fn write(dir: &Path, name: &str, docs: &[(&str, &str)]) -> PathBuf {
        let p = dir.join(name);
        let mut w = JsonlWriter::create(&p).unwrap();
        for (id, text) in docs {
            w.write(&Document::new(*id, *text)).unwrap();
        }
        w.finish().unwrap();
        p
    }

    const A: &str = "o comboio das oito chegou atrasado à estação de santa apolónia como sempre";
    const B: &str = "uma receita de bacalhau com natas para o jantar de domingo em família";

    #[test]
    fn clusters_across_shards_keep_first() {
        let dir = tempfile::tempdir().unwrap();
        let p0 = write(dir.path(), "a.jsonl", &[("x1", A), ("x2", B)]);
        let p1 = write(dir.path(), "b.jsonl", &[("y1", A), ("y2", "texto completamente diferente sem nada em comum aqui")]);
        let shards = CorpusShard::from_paths(&[p0, p1]);
        let tok = Tokenizer::new(&TokenizerSpec::whitespace()).unwrap();
        let scan = find_duplicates(&shards, &DedupConfig::default(), &tok, &dir.path().join("w"), 3).unwrap();
        assert_eq!(scan.docs, 4);
        assert_eq!(scan.clusters, vec![DuplicateCluster { survivor: "x1".into(), members: vec!["x1".into(), "y1".into()] }]);
        assert_eq!(scan.removed, vec![BTreeSet::new(), BTreeSet::from([0])]);
    }

    #[test]
    fn per_collection_scope_and_verification() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("c1")).unwrap();
        std::fs::create_dir_all(dir.path().join("c2")).unwrap();
        let p0 = write(&dir.path().join("c1"), "a.jsonl", &[("x1", A)]);
        let p1 = write(&dir.path().join("c2"), "a.jsonl", &[("y1", A)]);
        let shards = CorpusShard::from_paths(&[p0, p1]);
        let tok = Tokenizer::new(&TokenizerSpec::whitespace()).unwrap();
        let cfg = DedupConfig { scope: DedupScope::PerCollection, ..Default::default() };
        assert!(find_duplicates(&shards, &cfg, &tok, &dir.path().join("w"), 100).unwrap().clusters.is_empty());
        let cfg = DedupConfig { verify_threshold: Some(0.9), ..Default::default() };
        assert_eq!(find_duplicates(&shards, &cfg, &tok, &dir.path().join("w"), 100).unwrap().clusters.len(), 1);
    }

    #[test]
    fn duplicate_ids_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p0 = write(dir.path(), "a.jsonl", &[("x", A), ("x", B)]);
        let tok = Tokenizer::new(&TokenizerSpec::whitespace()).unwrap();
        let err = find_duplicates(&CorpusShard::from_paths(&[p0]), &DedupConfig::default(), &tok, &dir.path().join("w"), 10).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }
}
