use std::collections::BTreeMap;

use corpus_forge::dedup::{dedup_texts, jaccard, shingle, DedupConfig, DocMeta, UnionFind};
use corpus_forge_fixtures::{oracle, text};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted(mut c: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for x in &mut c {
        x.sort();
    }
    c.sort();
    c
}

#[test]
fn union_find_matches_transitive_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.random_range(1..40);
        let edges: Vec<(usize, usize)> = (0..rng.random_range(0..2 * n))
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let mut uf = UnionFind::new(n);
        for &(a, b) in &edges {
            uf.union(a, b);
        }
        assert_eq!(sorted(uf.components()), sorted(oracle::closure_components(n, &edges)));
    }
}

#[test]
fn shingle_jaccard_matches_oracle() {
    let docs = text::portuguese_paragraphs(20, 3);
    for w in docs.windows(2) {
        let (a, b) = (shingle(&w[0], 5), shingle(&w[1], 5));
        let av: Vec<String> = a.iter().cloned().collect();
        let bv: Vec<String> = b.iter().cloned().collect();
        assert_eq!(jaccard(&a, &b), oracle::exact_jaccard(&av, &bv));
    }
}

#[test]
fn exact_and_near_copies_cluster_together() {
    let base = text::portuguese_paragraphs(10, 8);
    let mut docs: Vec<(String, String)> = base.iter().enumerate().map(|(i, t)| (format!("d{i}"), t.clone())).collect();
    docs.push(("copy".into(), base[3].clone()));
    docs.push(("near".into(), format!("{} Uma frase final.", base[3])));
    let meta: BTreeMap<String, DocMeta> = BTreeMap::new();
    let clusters = dedup_texts(docs.iter().map(|(i, t)| (i.as_str(), t.as_str())), &meta, &DedupConfig::default()).unwrap();
    assert_eq!(clusters.len(), 1);
    let mut members = clusters[0].members.clone();
    members.sort();
    assert_eq!(members, ["copy", "d3", "near"]);
    // Without metadata the smallest id survives.
    assert_eq!(clusters[0].survivor, "copy");
}
