//! Main-content extraction from HTML and line-level cleanup.

mod html;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STAGE: &str = "extract";

fn default_boilerplate() -> Vec<String> {
    ["script", "style", "nav", "header", "footer", "aside", "form", "noscript"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// lines with fewer non-whitespace characters are dropped
    pub min_line_chars: usize,
    pub drop_duplicate_lines: bool,
    /// blocks whose anchor-text share exceeds this are dropped
    pub link_density_max: f64,
    pub boilerplate_tags: Vec<String>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            min_line_chars: 10,
            drop_duplicate_lines: true,
            link_density_max: 0.5,
            boilerplate_tags: default_boilerplate(),
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.link_density_max) {
            return Err(Error::config(format!(
                "extraction.link_density_max = {} is outside [0, 1]",
                self.link_density_max
            )));
        }
        Ok(())
    }
}

/// Block-structured plain text from an HTML document: one line per block
/// element in document order, boilerplate subtrees and link-dense blocks
/// removed, entities decoded, comments stripped. Never fails; hopeless
/// input yields an empty string.
pub fn extract_main_text(html: &str, cfg: &ExtractionConfig) -> String {
    html::extract(html, cfg)
}

/// Drops short lines and, optionally, repeats of an earlier line. Trailing
/// whitespace is trimmed from every surviving line and their order is
/// preserved.
pub fn clean_lines(text: &str, cfg: &ExtractionConfig) -> String {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out: Vec<&str> = Vec::new();
    for line in text.split('\n') {
        let line = line.trim_end();
        if line.chars().filter(|c| !c.is_whitespace()).count() < cfg.min_line_chars {
            continue;
        }
        if cfg.drop_duplicate_lines && !seen.insert(line) {
            continue;
        }
        out.push(line);
    }
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use regex::Regex;

    fn cfg() -> ExtractionConfig {
        ExtractionConfig::default()
    }

    fn no_markup(s: &str) -> bool {
        !Regex::new(r"<[a-zA-Z!/]").unwrap().is_match(s)
    }

    #[test]
    fn single_paragraph() {
        assert_eq!(
            extract_main_text("<html><body><p>Olá mundo</p></body></html>", &cfg()),
            "Olá mundo"
        );
    }

    #[test]
    fn script_removed() {
        assert_eq!(extract_main_text("<p>texto</p><script>var x=1;</script>", &cfg()), "texto");
    }

    #[test]
    fn link_dense_block_removed() {
        // div of 5 links: every visible char is anchor text, density 1.0
        let para = "Este parágrafo tem oitenta caracteres de texto corrido sem ligações nenhumas já.";
        assert_eq!(para.chars().count(), 80);
        let html = format!(
            "<div><a href=/1>Início</a> | <a href=/2>Notícias</a> | <a href=/3>Desporto</a> | \
             <a href=/4>Cultura</a> | <a href=/5>Contactos</a></div><p>{para}</p>"
        );
        // non-ws chars: 38 in anchors + 4 pipes = 42; density 38/42 = 0.905 > 0.5
        assert_eq!(extract_main_text(&html, &cfg()), para);
        let nav = format!("<nav><a href=/1>Início</a><a href=/2>Mapa</a></nav><p>{para}</p>");
        assert_eq!(extract_main_text(&nav, &cfg()), para);
        let lenient = ExtractionConfig { link_density_max: 1.0, ..cfg() };
        assert_eq!(extract_main_text(&html, &lenient).lines().count(), 2);
    }

    #[test]
    fn mixed_block_below_threshold_survives() {
        // 24 non-ws chars outside the anchor, 6 inside: density 0.2
        let html = "<p>Leia mais sobre o assunto <a href=x>aqui!</a></p>";
        assert_eq!(extract_main_text(html, &cfg()), "Leia mais sobre o assunto aqui!");
    }

    #[test]
    fn entities_comments_and_blocks() {
        let html = "<!DOCTYPE html><html><head><title>T</title><style>p{}</style></head>\
                    <body><!-- nota --><h1>S&atilde;o Jo&#227;o</h1><p>a &amp; b<br>c&nbsp;d</p>\
                    <footer>© 2020</footer></body></html>";
        assert_eq!(extract_main_text(html, &cfg()), "São João\na & b\nc d");
    }

    #[test]
    fn tag_soup_is_tolerated() {
        let html = "<div><p>um<p>dois</div></span><li>três<li>quatro";
        assert_eq!(extract_main_text(html, &cfg()), "um\ndois\ntrês\nquatro");
        assert_eq!(extract_main_text("<p>aberto <b>sem fim", &cfg()), "aberto sem fim");
        assert_eq!(extract_main_text("", &cfg()), "");
        assert_eq!(extract_main_text("<<<>>>", &cfg()), "<<<>>>");
    }

    #[test]
    fn escaped_markup_never_reappears() {
        let out = extract_main_text("<p>use &lt;p&gt; para parágrafos</p>", &cfg());
        assert_eq!(out, "use &lt;p> para parágrafos");
        assert!(no_markup(&out));
    }

    #[test]
    fn quoted_gt_in_attribute() {
        let html = r#"<p title="a > b">corpo</p>"#;
        assert_eq!(extract_main_text(html, &cfg()), "corpo");
    }

    #[test]
    fn clean_lines_examples() {
        assert_eq!(
            clean_lines("a\nlinha suficientemente longa\na", &cfg()),
            "linha suficientemente longa"
        );
        assert_eq!(
            clean_lines("x y z longa linha\nx y z longa linha", &cfg()),
            "x y z longa linha"
        );
        assert_eq!(clean_lines("linha repetida \t\nlinha repetida", &cfg()), "linha repetida");
        let keep_dups = ExtractionConfig { drop_duplicate_lines: false, ..cfg() };
        assert_eq!(
            clean_lines("linha repetida\nlinha repetida", &keep_dups),
            "linha repetida\nlinha repetida"
        );
    }

    proptest! {
        #[test]
        fn clean_lines_idempotent(lines in proptest::collection::vec("[a-c ]{0,14}", 0..12), min in 0usize..6) {
            let c = ExtractionConfig { min_line_chars: min, ..cfg() };
            let text = lines.join("\n");
            let once = clean_lines(&text, &c);
            prop_assert_eq!(clean_lines(&once, &c), once.clone());
            // survivors keep their relative order
            let mut it = text.split('\n').map(str::trim_end);
            for kept in once.split('\n').filter(|l| !l.is_empty()) {
                prop_assert!(it.any(|l| l == kept));
            }
        }

        #[test]
        fn extraction_emits_no_tags(
            parts in proptest::collection::vec(
                prop_oneof![
                    Just("<p>".to_string()), Just("</p>".to_string()), Just("<div>".to_string()),
                    Just("<script>x<y</script>".to_string()), Just("<a href='q'>".to_string()),
                    Just("</a>".to_string()), Just("&lt;b&gt;".to_string()), Just("<!-- c -->".to_string()),
                    Just("<".to_string()), Just(">".to_string()), "[a-zçã ]{0,8}",
                ],
                0..30,
            )
        ) {
            let html = parts.concat();
            prop_assert!(no_markup(&extract_main_text(&html, &cfg())));
        }

        #[test]
        fn boilerplate_text_never_emitted(inner in "[a-z]{3,10}", body in "[A-Z]{3,10}") {
            // inner text is lowercase, body text uppercase: no overlap possible
            let c = cfg();
            for tag in &c.boilerplate_tags {
                let html = format!("<p>{body}</p><{tag}><p>{inner}</p></{tag}>");
                let out = extract_main_text(&html, &c);
                prop_assert!(!out.contains(&inner), "{} leaked: {}", tag, out);
            }
        }
    }
}
