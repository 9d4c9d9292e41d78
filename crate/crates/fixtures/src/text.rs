//! Plain-text fixtures: Portuguese prose, repetitive text, and a mixed
//! document corpus that exercises every heuristic filter.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::words::{self, paragraph, sentence};

/// `size` documents of 3 to 6 paragraphs each, separated by blank lines.
pub fn portuguese_paragraphs(size: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let n = rng.random_range(3..=6);
            (0..n)
                .map(|_| {
                    let k = rng.random_range(2..=4);
                    paragraph(&mut rng, k)
                })
                .collect::<Vec<_>>()
                .join("\n\n")
        })
        .collect()
}

/// Ten lines; lines 3 and 5 repeat line 1, line 6 repeats line 2 and line 9
/// repeats line 4, so 4 of 10 lines are duplicates.
pub const REPETITION_TEN_LINES: &str = "a casa da praia é bonita\n\
o rio corre para o mar\n\
a casa da praia é bonita\n\
o sol brilha sobre a serra\n\
a casa da praia é bonita\n\
o rio corre para o mar\n\
uma linha nova aparece aqui\n\
outra linha sem repetição\n\
o sol brilha sobre a serra\n\
fim do pequeno texto";

/// Duplicate lines in [`REPETITION_TEN_LINES`], counted by hand.
pub const REPETITION_TEN_LINES_DUPLICATES: usize = 4;

/// Texts built by repeating lines, paragraphs or phrases from a small pool,
/// in varying proportions.
pub fn repetition_text(size: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let pool: Vec<String> = (0..rng.random_range(2..6)).map(|_| sentence(&mut rng)).collect();
            let n = rng.random_range(5..20);
            match i % 3 {
                0 => (0..n).map(|_| pool.choose(&mut rng).unwrap().clone()).collect::<Vec<_>>().join("\n"),
                1 => (0..n / 2 + 1)
                    .map(|_| {
                        let k = rng.random_range(1..3);
                        pool.choose_multiple(&mut rng, k).cloned().collect::<Vec<_>>().join("\n")
                    })
                    .collect::<Vec<_>>()
                    .join("\n\n"),
                _ => {
                    let phrase = pool[0].trim_end_matches('.').to_lowercase();
                    let filler = paragraph(&mut rng, 2);
                    format!("{filler} {}", vec![phrase.as_str(); n / 3 + 1].join(" "))
                }
            }
        })
        .collect()
}

const ENGLISH: &[&str] = &[
    "The city council approved the new budget for the public library last week.",
    "Several residents attended the meeting to discuss the future of the old train station.",
    "Local farmers expect a good harvest this year thanks to the mild spring weather.",
    "The museum will open a new exhibition about the history of the river port.",
    "Students from the university organised a concert in the central square.",
    "Traffic was diverted while workers repaired the bridge over the river.",
];

const BRAZILIAN: &[&str] = &[
    "Você pode pegar o trem ou o ônibus para chegar ao centro da cidade.",
    "O usuário deve fazer o registro antes de comprar a passagem pelo celular.",
    "No café da manhã tomamos suco de laranja e comemos pão com manteiga.",
    "A equipe de futebol treinou na grama do estádio durante toda a tarde.",
];

/// Every kind [`mixed_documents`] produces, in rotation order.
pub const DOCUMENT_KINDS: &[&str] = &[
    "prose",
    "prose_long",
    "repeated_lines",
    "repeated_paragraphs",
    "short",
    "hashtags",
    "bullets",
    "ellipsis",
    "english",
    "brazilian",
    "numbers",
    "prose_pii",
];

/// `(kind, text)` pairs cycling through [`DOCUMENT_KINDS`].
pub fn mixed_documents(size: usize, seed: u64) -> Vec<(&'static str, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let kind = DOCUMENT_KINDS[i % DOCUMENT_KINDS.len()];
            (kind, document_of_kind(kind, &mut rng))
        })
        .collect()
}

pub fn document_of_kind<R: Rng>(kind: &str, rng: &mut R) -> String {
    let paras = |rng: &mut R, lo: usize, hi: usize| -> String {
        let n = rng.random_range(lo..=hi);
        (0..n)
            .map(|_| {
                let k = rng.random_range(2..=4);
                paragraph(rng, k)
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    };
    match kind {
        "prose" => paras(rng, 3, 5),
        "prose_long" => paras(rng, 8, 12),
        "repeated_lines" => {
            let line = sentence(rng);
            let mut lines = vec![line.clone(); rng.random_range(4..8)];
            lines.extend((0..3).map(|_| sentence(rng)));
            lines.join("\n")
        }
        "repeated_paragraphs" => {
            let p = paragraph(rng, 3);
            let other = paragraph(rng, 3);
            [p.clone(), other, p.clone(), p].join("\n\n")
        }
        "short" => sentence(rng),
        "hashtags" => {
            let body = paragraph(rng, 4);
            let tags: Vec<String> = (0..12).map(|_| format!("#{}", words::NOUNS.choose(rng).unwrap())).collect();
            format!("{body}\n{}", tags.join(" "))
        }
        "bullets" => (0..rng.random_range(8..14))
            .map(|_| format!("• {}", sentence(rng)))
            .collect::<Vec<_>>()
            .join("\n"),
        "ellipsis" => (0..rng.random_range(6..10))
            .map(|_| format!("{}...", sentence(rng).trim_end_matches('.')))
            .collect::<Vec<_>>()
            .join("\n"),
        "english" => (0..rng.random_range(6..10))
            .map(|_| *ENGLISH.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" "),
        "brazilian" => {
            let mut s: Vec<String> = (0..3).map(|_| BRAZILIAN.choose(rng).unwrap().to_string()).collect();
            s.push(paragraph(rng, 4));
            s.join(" ")
        }
        "numbers" => (0..rng.random_range(30..60))
            .map(|_| format!("{} {:.2}", rng.random_range(1000..99999), rng.random::<f64>() * 100.0))
            .collect::<Vec<_>>()
            .join("\n"),
        "prose_pii" => {
            let body = paras(rng, 3, 4);
            format!(
                "{body}\n\nContacto: geral{}@exemplo.pt ou 21{} {} {}.",
                rng.random_range(1..99),
                rng.random_range(1..9),
                rng.random_range(100..999),
                rng.random_range(100..999)
            )
        }
        other => panic!("unknown document kind `{other}`"),
    }
}
