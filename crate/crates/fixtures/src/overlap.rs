//! Set pairs with an exactly known Jaccard similarity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::words::token;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapPair {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub shared: usize,
    pub only_a: usize,
    pub only_b: usize,
}

impl OverlapPair {
    /// `shared / (shared + only_a + only_b)` by construction.
    pub fn jaccard(&self) -> f64 {
        let union = self.shared + self.only_a + self.only_b;
        if union == 0 {
            1.0
        } else {
            self.shared as f64 / union as f64
        }
    }
}

/// Shared and unique counts for a union of `union` elements whose Jaccard is
/// as close to `target` as the union size allows. Unique elements are split
/// evenly, the odd one going to `a`.
pub fn overlap_counts(target: f64, union: usize) -> (usize, usize, usize) {
    let shared = ((target.clamp(0.0, 1.0) * union as f64).round() as usize).min(union);
    let rest = union - shared;
    (shared, rest - rest / 2, rest / 2)
}

/// `count` pairs over a union of `union` distinct tokens each. Returns the
/// pairs and the Jaccard they actually have, which differs from `target`
/// when `target * union` is not an integer.
pub fn overlap_pairs(target: f64, union: usize, count: usize, seed: u64) -> (Vec<OverlapPair>, f64) {
    let (shared, only_a, only_b) = overlap_counts(target, union);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..count)
        .map(|_| {
            // 64-bit random tokens; a collision would need ~2^32 draws
            let common: Vec<String> = (0..shared).map(|_| token(&mut rng)).collect();
            let mut a = common.clone();
            let mut b = common;
            a.extend((0..only_a).map(|_| token(&mut rng)));
            b.extend((0..only_b).map(|_| token(&mut rng)));
            OverlapPair { a, b, shared, only_a, only_b }
        })
        .collect::<Vec<_>>();
    let achieved = if union == 0 { 1.0 } else { shared as f64 / union as f64 };
    (pairs, achieved)
}
