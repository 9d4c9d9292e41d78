//! Near-duplicate removal: word shingles, MinHash signatures, LSH banding
//! and connected-component clustering with a deterministic survivor.

mod index;
mod unionfind;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::{xxh3_64, xxh3_64_with_seed};

use crate::error::{Error, Result};
use crate::text::nfc;

pub use index::{external_sort_groups, BandIndexReader, BandIndexWriter, BandRecord, BAND_RECORD_LEN};
pub use unionfind::UnionFind;

pub const STAGE: &str = "dedup";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SurvivorPolicy {
    /// Smallest `(shard_index, record_index)`.
    #[default]
    KeepFirst,
    /// Most tokens; ties broken as `KeepFirst`.
    KeepLongest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    /// One pass over every collection merged together.
    #[default]
    Merged,
    /// Duplicates are only looked for within a collection.
    PerCollection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub shingle_n: usize,
    pub num_hashes: usize,
    pub bands: usize,
    pub rows_per_band: usize,
    pub survivor_policy: SurvivorPolicy,
    pub seed: u64,
    /// Optional exact-Jaccard check of candidate pairs before clustering.
    pub verify_threshold: Option<f64>,
    pub scope: DedupScope,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            shingle_n: 5,
            num_hashes: 112,
            bands: 14,
            rows_per_band: 8,
            survivor_policy: SurvivorPolicy::KeepFirst,
            seed: 0x5eed,
            verify_threshold: None,
            scope: DedupScope::Merged,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shingle_n == 0 {
            return Err(Error::config("dedup.shingle_n must be at least 1"));
        }
        if self.bands == 0 || self.rows_per_band == 0 || self.bands * self.rows_per_band != self.num_hashes {
            return Err(Error::config(format!(
                "dedup: bands ({}) x rows_per_band ({}) must equal num_hashes ({})",
                self.bands, self.rows_per_band, self.num_hashes
            )));
        }
        if self.bands > u16::MAX as usize + 1 {
            return Err(Error::config("dedup.bands does not fit the band index"));
        }
        if let Some(t) = self.verify_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::config(format!("dedup.verify_threshold = {t} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Probability that a pair with Jaccard similarity `s` becomes a
    /// candidate: `1 - (1 - s^r)^b`.
    pub fn detection_probability(&self, s: f64) -> f64 {
        1.0 - (1.0 - s.powi(self.rows_per_band as i32)).powi(self.bands as i32)
    }
}

/// Contiguous `n`-word windows after NFC, case folding and whitespace
/// splitting. Texts with fewer than `n` words give one shingle holding all
/// of them (none for a text without words).
pub fn shingle(text: &str, n: usize) -> BTreeSet<String> {
    assert!(n >= 1, "shingle size must be at least 1");
    let folded = nfc(text).to_lowercase();
    let words: Vec<&str> = folded.split_whitespace().collect();
    if words.is_empty() {
        return BTreeSet::new();
    }
    if words.len() < n {
        return BTreeSet::from([words.join(" ")]);
    }
    words.windows(n).map(|w| w.join(" ")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub doc_id: String,
    pub values: Vec<u64>,
}

/// Per-function seeds, expanded from the configured seed with splitmix64.
pub fn hash_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut state = seed;
    (0..count)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        })
        .collect()
}

#[inline]
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^ (k >> 33)
}

/// Reusable signer: holds the expanded per-function seeds.
#[derive(Debug, Clone)]
pub struct MinHasher {
    seeds: Vec<u64>,
}

impl MinHasher {
    pub fn new(cfg: &DedupConfig) -> Self {
        MinHasher { seeds: hash_seeds(cfg.seed, cfg.num_hashes) }
    }

    /// Each shingle is hashed once with xxh3; function `i` is then
    /// `fmix64(base ^ seed_i)`, a bijection of the base hash.
    pub fn sign<'a, I>(&self, doc_id: &str, shingles: I) -> Result<MinHashSignature>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut values = vec![u64::MAX; self.seeds.len()];
        let mut any = false;
        for s in shingles {
            any = true;
            let base = xxh3_64(s.as_bytes());
            for (v, &seed) in values.iter_mut().zip(&self.seeds) {
                *v = (*v).min(fmix64(base ^ seed));
            }
        }
        if !any {
            return Err(Error::contract(format!("document {doc_id}: empty shingle set")));
        }
        Ok(MinHashSignature { doc_id: doc_id.to_string(), values })
    }
}

pub fn minhash_signature(doc_id: &str, shingles: &BTreeSet<String>, cfg: &DedupConfig) -> Result<MinHashSignature> {
    MinHasher::new(cfg).sign(doc_id, shingles)
}

pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64> {
    if a.values.len() != b.values.len() || a.values.is_empty() {
        return Err(Error::contract(format!(
            "signature lengths differ or are empty: {} vs {}",
            a.values.len(),
            b.values.len()
        )));
    }
    let same = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.values.len() as f64)
}

/// Exact Jaccard similarity of two sets (1.0 for two empty sets).
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Hash of band `band` of `values` (rows `band*r .. (band+1)*r`).
pub fn band_hash(values: &[u64], band: usize, rows: usize) -> u64 {
    let mut buf = Vec::with_capacity(rows * 8);
    for v in &values[band * rows..(band + 1) * rows] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    xxh3_64_with_seed(&buf, band as u64)
}

fn check_len(sig: &MinHashSignature, cfg: &DedupConfig) -> Result<()> {
    if sig.values.len() != cfg.bands * cfg.rows_per_band {
        return Err(Error::contract(format!(
            "signature of {} has {} values, config expects {}",
            sig.doc_id,
            sig.values.len(),
            cfg.bands * cfg.rows_per_band
        )));
    }
    Ok(())
}

/// All unordered pairs `(a, b)` with `a < b` that agree on every row of at
/// least one band.
pub fn lsh_candidates(signatures: &[MinHashSignature], cfg: &DedupConfig) -> Result<BTreeSet<(String, String)>> {
    for s in signatures {
        check_len(s, cfg)?;
    }
    let mut pairs = BTreeSet::new();
    for band in 0..cfg.bands {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, s) in signatures.iter().enumerate() {
            buckets.entry(band_hash(&s.values, band, cfg.rows_per_band)).or_default().push(i);
        }
        for members in buckets.values().filter(|m| m.len() > 1) {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    let row = |k: usize| &signatures[k].values[band * cfg.rows_per_band..(band + 1) * cfg.rows_per_band];
                    // a hash collision between different bands is not a match
                    if row(i) != row(j) {
                        continue;
                    }
                    let (a, b) = (&signatures[i].doc_id, &signatures[j].doc_id);
                    if a != b {
                        pairs.insert(if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) });
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// What survivor selection needs to know about a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub shard_index: u64,
    pub record_index: u64,
    pub tokens: u64,
}

impl DocMeta {
    fn position(&self) -> (u64, u64) {
        (self.shard_index, self.record_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateCluster {
    pub survivor: String,
    /// Sorted; includes the survivor.
    pub members: Vec<String>,
}

/// Index of the survivor among `members` under `policy`. Documents without
/// metadata sort after all others, then by id.
pub fn choose_survivor<'a>(members: &[&'a str], meta: &BTreeMap<String, DocMeta>, policy: SurvivorPolicy) -> &'a str {
    let key = |id: &str| {
        let m = meta.get(id);
        let pos = m.map_or((u64::MAX, u64::MAX), DocMeta::position);
        let tokens = m.map_or(0, |m| m.tokens);
        (tokens, pos)
    };
    members
        .iter()
        .copied()
        .min_by(|a, b| {
            let (ta, pa) = key(a);
            let (tb, pb) = key(b);
            let first = pa.cmp(&pb).then_with(|| a.cmp(b));
            match policy {
                SurvivorPolicy::KeepFirst => first,
                SurvivorPolicy::KeepLongest => tb.cmp(&ta).then(first),
            }
        })
        .expect("cluster has members")
}

/// Connected components of the pair graph, each with its survivor. Only
/// documents that appear in some pair are clustered; output is sorted by
/// survivor id.
pub fn cluster_and_select(
    pairs: &BTreeSet<(String, String)>,
    meta: &BTreeMap<String, DocMeta>,
    policy: SurvivorPolicy,
) -> Vec<DuplicateCluster> {
    let mut ids: Vec<&str> = pairs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
    ids.sort_unstable();
    ids.dedup();
    let pos: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    for (a, b) in pairs {
        uf.union(pos[a.as_str()], pos[b.as_str()]);
    }
    let mut clusters: Vec<DuplicateCluster> = uf
        .components()
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| {
            let members: Vec<&str> = c.iter().map(|&i| ids[i]).collect();
            let survivor = choose_survivor(&members, meta, policy).to_string();
            let mut members: Vec<String> = members.into_iter().map(String::from).collect();
            members.sort();
            DuplicateCluster { survivor, members }
        })
        .collect();
    clusters.sort_by(|a, b| a.survivor.cmp(&b.survivor));
    clusters
}

/// In-memory convenience: texts in, clusters out.
pub fn dedup_texts<'a, I>(docs: I, meta: &BTreeMap<String, DocMeta>, cfg: &DedupConfig) -> Result<Vec<DuplicateCluster>>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    cfg.validate()?;
    let hasher = MinHasher::new(cfg);
    let mut sigs = Vec::new();
    let mut sets = HashMap::new();
    for (id, text) in docs {
        let sh = shingle(text, cfg.shingle_n);
        if sh.is_empty() {
            continue;
        }
        sigs.push(hasher.sign(id, &sh)?);
        if cfg.verify_threshold.is_some() {
            sets.insert(id.to_string(), sh);
        }
    }
    let mut pairs = lsh_candidates(&sigs, cfg)?;
    if let Some(t) = cfg.verify_threshold {
        pairs.retain(|(a, b)| jaccard(&sets[a], &sets[b]) >= t);
    }
    Ok(cluster_and_select(&pairs, meta, cfg.survivor_policy))
}
