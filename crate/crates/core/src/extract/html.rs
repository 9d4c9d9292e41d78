//! A forgiving HTML scanner that turns markup into block-structured text.
//!
//! No DOM is built. The scanner keeps a stack of open elements to know
//! whether it is inside a removed subtree or inside an anchor, and flushes
//! the current text block whenever a block-level tag opens or closes.

use std::collections::BTreeSet;

use super::ExtractionConfig;

/// Subtrees that never carry main text, regardless of configuration.
const NON_CONTENT: &[&str] = &[
    "head", "title", "script", "style", "template", "svg", "iframe", "object", "canvas", "select",
    "textarea",
];

/// Elements whose content is raw text up to the matching end tag.
const RAW_TEXT: &[&str] = &["script", "style", "textarea", "title", "xmp", "noscript", "template"];

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const BLOCK: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "center", "dd", "details",
    "dialog", "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hr", "html", "li", "main", "nav", "ol", "p", "pre",
    "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
];

#[derive(Debug)]
enum Token<'a> {
    Text(&'a str),
    Start { name: String, self_closing: bool },
    End { name: String },
}

/// Lexes `html` into text runs and tags. Comments, doctypes and processing
/// instructions are dropped; raw-text element bodies are skipped here.
fn tokenize(html: &str) -> Vec<Token<'_>> {
    let bytes = html.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut text_start = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &html[i..];
        let next = bytes.get(i + 1).copied();
        let is_tag = match next {
            Some(b'!') | Some(b'?') => true,
            Some(b'/') => bytes.get(i + 2).is_some_and(|b| b.is_ascii_alphabetic()),
            Some(b) => b.is_ascii_alphabetic(),
            None => false,
        };
        if !is_tag {
            i += 1;
            continue;
        }
        if text_start < i {
            out.push(Token::Text(&html[text_start..i]));
        }
        if rest.starts_with("<!--") {
            i = match rest[4..].find("-->") {
                Some(end) => i + 4 + end + 3,
                None => bytes.len(),
            };
        } else if next == Some(b'!') || next == Some(b'?') {
            i = rest.find('>').map_or(bytes.len(), |e| i + e + 1);
        } else if next == Some(b'/') {
            let name = tag_name(&rest[2..]);
            out.push(Token::End { name });
            i = rest.find('>').map_or(bytes.len(), |e| i + e + 1);
        } else {
            let name = tag_name(&rest[1..]);
            let tag_end = find_tag_end(rest).map_or(bytes.len(), |e| i + e + 1);
            let self_closing = html[..tag_end].ends_with("/>");
            i = tag_end;
            if RAW_TEXT.contains(&name.as_str()) && !self_closing {
                // skip to the matching close tag, case-insensitively
                let body_end = find_close_tag(&html[i..], &name).map_or(bytes.len(), |p| i + p);
                out.push(Token::Start { name: name.clone(), self_closing: false });
                i = html[body_end..].find('>').map_or(bytes.len(), |e| body_end + e + 1);
                out.push(Token::End { name });
            } else {
                out.push(Token::Start { name, self_closing });
            }
        }
        text_start = i;
    }
    if text_start < bytes.len() {
        out.push(Token::Text(&html[text_start..]));
    }
    out
}

/// Offset of `</name` (ASCII case-insensitive) in `hay`.
fn find_close_tag(hay: &str, name: &str) -> Option<usize> {
    let hb = hay.as_bytes();
    let nb = name.as_bytes();
    let mut from = 0;
    while let Some(p) = hay[from..].find("</") {
        let at = from + p;
        let cand = &hb[at + 2..];
        if cand.len() >= nb.len() && cand[..nb.len()].eq_ignore_ascii_case(nb) {
            return Some(at);
        }
        from = at + 2;
    }
    None
}

fn tag_name(s: &str) -> String {
    s.chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '-' || *c == ':')
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Offset of the `>` closing a start tag, honouring quoted attribute values.
fn find_tag_end(tag: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in tag.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '>' => return Some(i),
            None => {}
        }
    }
    None
}

#[derive(Default)]
struct Block {
    text: String,
    chars: usize,
    anchor_chars: usize,
    pending_space: bool,
}

impl Block {
    fn push(&mut self, run: &str, in_anchor: bool) {
        for c in run.chars() {
            if c.is_whitespace() {
                self.pending_space = true;
                continue;
            }
            if self.pending_space && !self.text.is_empty() {
                self.text.push(' ');
            }
            self.pending_space = false;
            self.text.push(c);
            self.chars += 1;
            if in_anchor {
                self.anchor_chars += 1;
            }
        }
    }

    fn link_density(&self) -> f64 {
        if self.chars == 0 {
            0.0
        } else {
            self.anchor_chars as f64 / self.chars as f64
        }
    }
}

/// Removes anything that would read as markup in the output: a literal `<`
/// directly followed by a tag-start character is re-escaped.
fn neutralize_markup(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '<' && chars.peek().is_some_and(|n| n.is_ascii_alphabetic() || *n == '!' || *n == '/') {
            out.push_str("&lt;");
        } else {
            out.push(c);
        }
    }
    out
}

pub(super) fn extract(html: &str, cfg: &ExtractionConfig) -> String {
    let removed: BTreeSet<String> = cfg
        .boilerplate_tags
        .iter()
        .map(|t| t.to_ascii_lowercase())
        .chain(NON_CONTENT.iter().map(|s| s.to_string()))
        .collect();
    let mut stack: Vec<String> = Vec::new();
    let mut removed_depth = 0usize;
    let mut anchor_depth = 0usize;
    let mut block = Block::default();
    let mut lines: Vec<String> = Vec::new();

    let flush = |block: &mut Block, lines: &mut Vec<String>| {
        let b = std::mem::take(block);
        if b.chars > 0 && b.link_density() <= cfg.link_density_max {
            lines.push(neutralize_markup(&b.text));
        }
    };

    for token in tokenize(html) {
        match token {
            Token::Text(raw) => {
                if removed_depth == 0 {
                    let decoded = html_escape::decode_html_entities(raw);
                    block.push(&decoded, anchor_depth > 0);
                }
            }
            Token::Start { name, self_closing } => {
                if BLOCK.contains(&name.as_str()) {
                    flush(&mut block, &mut lines);
                }
                if self_closing || VOID.contains(&name.as_str()) {
                    continue;
                }
                if removed.contains(&name) {
                    removed_depth += 1;
                }
                if name == "a" {
                    anchor_depth += 1;
                }
                stack.push(name);
            }
            Token::End { name } => {
                if BLOCK.contains(&name.as_str()) {
                    flush(&mut block, &mut lines);
                }
                let Some(pos) = stack.iter().rposition(|open| *open == name) else {
                    continue;
                };
                for closed in stack.drain(pos..) {
                    if removed.contains(&closed) {
                        removed_depth -= 1;
                    }
                    if closed == "a" {
                        anchor_depth -= 1;
                    }
                }
            }
        }
    }
    flush(&mut block, &mut lines);
    lines.join("\n")
}
