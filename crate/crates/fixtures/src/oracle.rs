//! Brute-force reference computations. Each one favours the obvious
//! quadratic formulation over speed so that it can be trusted by reading it.

use unicode_normalization::UnicodeNormalization;

fn nfc(text: &str) -> String {
    text.nfc().collect()
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// |A ∩ B| / |A ∪ B| over de-duplicated elements; two empty sets give 1.
pub fn exact_jaccard<T: Ord + Clone>(a: &[T], b: &[T]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    a.dedup();
    b.sort();
    b.dedup();
    let inter = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Probability that a pair of similarity `s` shares at least one band.
pub fn detection_probability(s: f64, bands: u32, rows: i32) -> f64 {
    1.0 - (1.0 - s.powi(rows)).powi(bands as i32)
}

/// Pieces of `text.trim()` between runs of at least `min_run` newlines.
fn pieces(text: &str, min_run: usize) -> Vec<String> {
    let text = text.trim();
    if text.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut run = 0;
    for c in text.chars() {
        if c == '\n' {
            run += 1;
            continue;
        }
        if run > 0 {
            if run >= min_run {
                out.push(std::mem::take(&mut cur));
            } else {
                cur.extend(std::iter::repeat_n('\n', run));
            }
            run = 0;
        }
        cur.push(c);
    }
    out.push(cur);
    out
}

/// `(duplicate count, duplicate chars)` where an element is a duplicate if
/// an identical element occurs earlier.
fn earlier_repeats(items: &[String]) -> (usize, usize) {
    let mut count = 0;
    let mut mass = 0;
    for (i, x) in items.iter().enumerate() {
        if items[..i].contains(x) {
            count += 1;
            mass += chars(x);
        }
    }
    (count, mass)
}

pub fn lines(text: &str) -> Vec<String> {
    pieces(text, 1)
}

pub fn paragraphs(text: &str) -> Vec<String> {
    pieces(text, 2)
}

/// Share of lines that repeat an earlier line.
pub fn dup_line_frac(text: &str) -> f64 {
    let l = lines(&nfc(text));
    frac(earlier_repeats(&l).0, l.len())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Repetition {
    pub dup_para_frac: f64,
    pub dup_para_char_frac: f64,
    pub dup_line_frac: f64,
    pub dup_line_char_frac: f64,
    pub top_ngram_char_frac: [f64; 3],
    pub dup_ngram_char_frac: [f64; 6],
}

/// The most frequent n-gram's count times its length (words joined by
/// single spaces). Ties: longer, then lexicographically smaller. Zero unless
/// it occurs more than once.
pub fn top_ngram_chars(words: &[String], n: usize) -> usize {
    if words.len() < n {
        return 0;
    }
    let grams: Vec<&[String]> = words.windows(n).collect();
    let mut best: Option<(usize, usize, &[String])> = None;
    for g in &grams {
        let count = grams.iter().filter(|h| *h == g).count();
        let len = chars(&g.join(" "));
        let better = match best {
            None => true,
            Some((bc, bl, bg)) => count > bc || (count == bc && (len > bl || (len == bl && *g < bg))),
        };
        if better {
            best = Some((count, len, g));
        }
    }
    match best {
        Some((c, l, _)) if c > 1 => c * l,
        _ => 0,
    }
}

/// Word chars of n-grams that repeat an earlier one, scanning left to right
/// and jumping past each repeat.
pub fn dup_ngram_chars(words: &[String], n: usize) -> usize {
    let mut seen: Vec<&[String]> = Vec::new();
    let mut mass = 0;
    let mut i = 0;
    while i + n <= words.len() {
        let g = &words[i..i + n];
        if seen.contains(&g) {
            mass += g.iter().map(|w| chars(w)).sum::<usize>();
            i += n;
        } else {
            seen.push(g);
            i += 1;
        }
    }
    mass
}

pub fn repetition(text: &str) -> Repetition {
    let text = nfc(text);
    let total = chars(&text);
    let p = paragraphs(&text);
    let l = lines(&text);
    let (pd, pc) = earlier_repeats(&p);
    let (ld, lc) = earlier_repeats(&l);
    let words: Vec<String> = text.split_whitespace().map(String::from).collect();
    let mut r = Repetition {
        dup_para_frac: frac(pd, p.len()),
        dup_para_char_frac: frac(pc, total),
        dup_line_frac: frac(ld, l.len()),
        dup_line_char_frac: frac(lc, total),
        ..Default::default()
    };
    for n in 2..=4 {
        r.top_ngram_char_frac[n - 2] = frac(top_ngram_chars(&words, n), total);
    }
    for n in 5..=10 {
        r.dup_ngram_char_frac[n - 5] = frac(dup_ngram_chars(&words, n), total);
    }
    r
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Quality {
    pub word_count: f64,
    pub mean_word_len: f64,
    pub hash_word_ratio: f64,
    pub ellipsis_word_ratio: f64,
    pub bullet_line_frac: f64,
    pub ellipsis_line_frac: f64,
    pub alpha_word_frac: f64,
    pub stop_word_hits: f64,
}

fn count_non_overlapping(hay: &str, needle: &str) -> usize {
    let (h, n): (Vec<char>, Vec<char>) = (hay.chars().collect(), needle.chars().collect());
    let mut i = 0;
    let mut c = 0;
    while i + n.len() <= h.len() {
        if h[i..i + n.len()] == n[..] {
            c += 1;
            i += n.len();
        } else {
            i += 1;
        }
    }
    c
}

fn strip_to_alnum_lower(w: &str) -> String {
    let cs: Vec<char> = w.chars().collect();
    let start = cs.iter().position(|c| c.is_alphanumeric());
    let end = cs.iter().rposition(|c| c.is_alphanumeric());
    match (start, end) {
        (Some(s), Some(e)) => cs[s..=e].iter().collect::<String>().to_lowercase(),
        _ => String::new(),
    }
}

pub fn quality(text: &str, stop_words: &[&str]) -> Quality {
    let text = nfc(text);
    let words: Vec<&str> = text.split_whitespace().collect();
    let n = words.len();
    let word_chars: usize = words.iter().map(|w| chars(w)).sum();
    let hashes = text.chars().filter(|&c| c == '#').count();
    let ellipses = count_non_overlapping(&text, "...") + text.chars().filter(|&c| c == '…').count();
    let ls: Vec<&str> = text.split('\n').map(str::trim).filter(|l| !l.is_empty()).collect();
    let bullets = ls
        .iter()
        .filter(|l| matches!(l.chars().next(), Some('•' | '‣' | '◦' | '·' | '-' | '*')))
        .count();
    let ell_lines = ls.iter().filter(|l| l.ends_with("...") || l.ends_with('…')).count();
    let alpha = words.iter().filter(|w| w.chars().any(char::is_alphabetic)).count();
    let stops: Vec<String> = stop_words.iter().map(|s| s.to_lowercase()).collect();
    let hits = words.iter().filter(|w| stops.contains(&strip_to_alnum_lower(w))).count();
    Quality {
        word_count: n as f64,
        mean_word_len: frac(word_chars, n),
        hash_word_ratio: frac(hashes, n),
        ellipsis_word_ratio: frac(ellipses, n),
        bullet_line_frac: frac(bullets, ls.len()),
        ellipsis_line_frac: frac(ell_lines, ls.len()),
        alpha_word_frac: frac(alpha, n),
        stop_word_hits: hits as f64,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FineWeb {
    pub line_count: f64,
    pub short_line_frac: f64,
    pub line_punct_frac: f64,
    pub char_dup_frac: f64,
    pub new_line_ratio: f64,
}

pub fn fineweb(text: &str, short_line_chars: usize) -> FineWeb {
    let text = nfc(text);
    let ls: Vec<String> = text
        .split('\n')
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();
    if ls.is_empty() {
        return FineWeb::default();
    }
    let n = ls.len();
    let short = ls.iter().filter(|l| chars(l) < short_line_chars).count();
    let punct = ls
        .iter()
        .filter(|l| matches!(l.chars().last(), Some('.' | '!' | '?' | '…' | '"' | '\'' | '»' | '”' | '’')))
        .count();
    let (_, dup_mass) = earlier_repeats(&ls);
    let body = text.chars().filter(|&c| c != '\n').count();
    let newlines = text.chars().filter(|&c| c == '\n').count();
    let words = text.split_whitespace().count();
    FineWeb {
        line_count: n as f64,
        short_line_frac: frac(short, n),
        line_punct_frac: frac(punct, n),
        char_dup_frac: frac(dup_mass, body),
        new_line_ratio: if newlines == 0 {
            0.0
        } else if words == 0 {
            f64::INFINITY
        } else {
            newlines as f64 / words as f64
        },
    }
}

/// Connected components of an undirected graph by transitive closure
/// (Warshall). Components are sorted, and listed by smallest member.
pub fn closure_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut done = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if done[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        for &j in &comp {
            done[j] = true;
        }
        out.push(comp);
    }
    out
}

/// Tokens as maximal runs of non-whitespace characters.
pub fn whitespace_tokens(text: &str) -> u64 {
    let mut count = 0;
    let mut inside = false;
    for c in text.chars() {
        if c.is_whitespace() {
            inside = false;
        } else if !inside {
            inside = true;
            count += 1;
        }
    }
    count
}

/// Greedy longest-match segmentation of every whitespace run; characters
/// not starting any vocabulary entry cost one token.
pub fn vocabulary_tokens(text: &str, vocab: &[&str]) -> u64 {
    let mut total = 0;
    for run in text.split_whitespace() {
        let cs: Vec<char> = run.chars().collect();
        let mut i = 0;
        while i < cs.len() {
            let rest: String = cs[i..].iter().collect();
            let step = vocab
                .iter()
                .filter(|v| !v.is_empty() && rest.starts_with(**v))
                .map(|v| v.chars().count())
                .max()
                .unwrap_or(1);
            i += step;
            total += 1;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{REPETITION_TEN_LINES, REPETITION_TEN_LINES_DUPLICATES};

    #[test]
    fn ten_line_fixture_matches_hand_count() {
        assert_eq!(lines(REPETITION_TEN_LINES).len(), 10);
        assert_eq!(dup_line_frac(REPETITION_TEN_LINES), REPETITION_TEN_LINES_DUPLICATES as f64 / 10.0);
    }

    fn union_find(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], x: usize) -> usize {
            if p[x] == x { x } else { let r = root(p, p[x]); p[x] = r; r }
        }
        for &(a, b) in edges {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = root(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    #[test]
    fn closure_agrees_with_union_find() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let edges: Vec<(usize, usize)> =
                (0..rng.random_range(0..n)).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
            assert_eq!(closure_components(n, &edges), union_find(n, &edges));
        }
    }

    #[test]
    fn jaccard_by_hand() {
        assert_eq!(exact_jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(exact_jaccard::<u8>(&[], &[]), 1.0);
    }

    #[test]
    fn ngram_examples() {
        let w: Vec<String> = "a b a b a b".split(' ').map(String::from).collect();
        // "a b" x3, length 3
        assert_eq!(top_ngram_chars(&w, 2), 9);
        let w: Vec<String> = "x y z w v x y z w v".split(' ').map(String::from).collect();
        assert_eq!(dup_ngram_chars(&w, 5), 5);
    }

    #[test]
    fn tokens() {
        assert_eq!(whitespace_tokens("  um  dois\ttrês\n"), 3);
        assert_eq!(vocabulary_tokens("abcd", &["ab", "abc", "cd"]), 2);
        assert_eq!(vocabulary_tokens("xyz", &["ab"]), 3);
    }
}
