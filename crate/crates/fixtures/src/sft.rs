//! Chat-format SFT rows as JSON values, in the default field layout
//! (`id`, `source`, `messages[{role, content}]`, `lang`, `quality_score`).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::words::{paragraph, sentence};

fn question<R: Rng>(rng: &mut R) -> (String, u64) {
    let a = rng.random_range(2..100u64);
    let b = rng.random_range(2..100u64);
    (format!("Quanto é {a} vezes {b}? Explique o raciocínio."), a * b)
}

fn row(id: String, source: &str, user: String, assistant: String, score: Option<f64>) -> Value {
    let mut v = json!({
        "id": id,
        "source": source,
        "messages": [
            {"role": "user", "content": user},
            {"role": "assistant", "content": assistant},
        ],
        "lang": "por",
    });
    if let Some(s) = score {
        v["quality_score"] = json!(s);
    }
    v
}

/// A mixed bag: reasoning traces on every 10th row, self-referential
/// answers on every 7th, unscored rows on every 5th, boxed answers on
/// every 4th and a repeated prompt on every 13th.
pub fn sft_entries(size: usize, seed: u64, source: &str) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prompts: Vec<String> = Vec::new();
    (0..size)
        .map(|i| {
            let (mut user, product) = question(&mut rng);
            if i % 13 == 12 && !prompts.is_empty() {
                user = prompts[rng.random_range(0..prompts.len())].clone();
            }
            prompts.push(user.clone());
            let mut answer = paragraph(&mut rng, 2);
            if i % 4 == 0 {
                answer.push_str(&format!(" A resposta é \\boxed{{{product}}}."));
            } else {
                answer.push_str(&format!(" A resposta é {product}."));
            }
            if i % 10 == 0 {
                answer = format!("<think>{}</think>\n{answer}", sentence(&mut rng));
            }
            if i % 7 == 0 {
                answer = format!("Como modelo de linguagem, respondo assim. {answer}");
            }
            let score = (i % 5 != 0).then(|| (rng.random_range(10..=60) as f64) / 10.0);
            row(format!("{source}-{i:06}"), source, user, answer, score)
        })
        .collect()
}

/// Rows whose single answer ends in `\boxed{N}`, all scored 6.
pub fn boxed_math_entries(size: usize, seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let (user, product) = question(&mut rng);
            let answer = format!("{} Logo, \\boxed{{{product}}}.", sentence(&mut rng));
            row(format!("math-{i:06}"), "math", user, answer, Some(6.0))
        })
        .collect()
}

/// Rows for one mixture source, appended until their whitespace token
/// count reaches `min_tokens`. Returns the rows and their token total.
pub fn mixture_source(name: &str, min_tokens: u64, seed: u64) -> (Vec<Value>, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut total = 0u64;
    while total < min_tokens {
        let (user, product) = question(&mut rng);
        let k = rng.random_range(1..=6);
        let answer = format!("{} Resultado: {product}.", paragraph(&mut rng, k));
        total += (user.split_whitespace().count() + answer.split_whitespace().count()) as u64;
        rows.push(row(format!("{name}-{:07}", rows.len()), name, user, answer, Some(5.5)));
    }
    (rows, total)
}
