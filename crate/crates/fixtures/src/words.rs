//! A small European Portuguese vocabulary and a seeded sentence generator.

use rand::seq::IndexedRandom;
use rand::Rng;

pub const NOUNS: &[&str] = &[
    "cidade", "estação", "comboio", "biblioteca", "praça", "rio", "ponte", "escola", "mercado", "jardim",
    "museu", "igreja", "aldeia", "câmara", "universidade", "livro", "jornal", "professora", "médico", "vizinho",
    "família", "janela", "rua", "avenida", "festa", "música", "história", "viagem", "serra", "costa",
    "praia", "barco", "pescador", "padaria", "farmácia", "hospital", "tribunal", "governo", "empresa", "fábrica",
    "colheita", "vinho", "azeite", "castelo", "muralha", "torre", "feira", "teatro", "cinema", "orquestra",
];

pub const ADJECTIVES: &[&str] = &[
    "antiga", "nova", "grande", "pequena", "bonita", "tranquila", "movimentada", "histórica", "moderna", "famosa",
    "silenciosa", "luminosa", "estreita", "larga", "central", "municipal", "nacional", "regional", "popular", "discreta",
];

pub const VERBS: &[&str] = &[
    "recebe", "acolhe", "mostra", "guarda", "anuncia", "prepara", "organiza", "descreve", "visita", "procura",
    "encontra", "apresenta", "celebra", "recorda", "explica", "transforma", "protege", "abre", "fecha", "renova",
];

pub const PLACES: &[&str] = &[
    "Lisboa", "Porto", "Coimbra", "Braga", "Évora", "Faro", "Aveiro", "Viseu", "Guarda", "Setúbal",
    "Leiria", "Beja", "Tomar", "Sintra", "Cascais", "Funchal", "Ponta Delgada", "Bragança", "Chaves", "Lagos",
];

const CONNECTORS: &[&str] = &["porque", "enquanto", "embora", "quando", "depois que", "assim que"];

/// Words that the default stop-word list of the quality filter contains.
pub const STOP_WORDS: &[&str] = &["de", "a", "e", "que", "o", "da", "do", "em", "para", "com", "não", "uma"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty word list")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One declarative sentence ending in a full stop.
pub fn sentence<R: Rng>(rng: &mut R) -> String {
    let body = match rng.random_range(0..4) {
        0 => format!(
            "a {} {} de {} {} uma {} {} para a {}",
            pick(rng, NOUNS),
            pick(rng, ADJECTIVES),
            pick(rng, PLACES),
            pick(rng, VERBS),
            pick(rng, NOUNS),
            pick(rng, ADJECTIVES),
            pick(rng, NOUNS)
        ),
        1 => format!(
            "em {} o {} {} a {} com uma {} {}",
            pick(rng, PLACES),
            pick(rng, NOUNS),
            pick(rng, VERBS),
            pick(rng, NOUNS),
            pick(rng, NOUNS),
            pick(rng, ADJECTIVES)
        ),
        2 => format!(
            "a {} não {} a {} {} {} a {} {} da {}",
            pick(rng, NOUNS),
            pick(rng, VERBS),
            pick(rng, NOUNS),
            pick(rng, CONNECTORS),
            pick(rng, VERBS),
            pick(rng, NOUNS),
            pick(rng, ADJECTIVES),
            pick(rng, NOUNS)
        ),
        _ => format!(
            "todos os anos a {} de {} {} que a {} {} do {}",
            pick(rng, NOUNS),
            pick(rng, PLACES),
            pick(rng, VERBS),
            pick(rng, NOUNS),
            pick(rng, VERBS),
            pick(rng, NOUNS)
        ),
    };
    format!("{}.", capitalize(&body))
}

/// A paragraph of `n` sentences on one line.
pub fn paragraph<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| sentence(rng)).collect::<Vec<_>>().join(" ")
}

/// A run of unique-ish pseudo words (`w1f3a...`), useful where set
/// arithmetic must be exact.
pub fn token<R: Rng>(rng: &mut R) -> String {
    format!("w{:016x}", rng.random::<u64>())
}
