//! HTML to paragraph extraction.
//!
//! A tolerant single-pass stripper: tags are dropped, the bodies of
//! `script`/`style`-like elements are skipped, block-level tags become
//! paragraph breaks, and entities are decoded. The remaining text is split on
//! blank lines and short paragraphs are discarded.

use serde::{Deserialize, Serialize};

use super::fetch::{PageStatus, RawPage};

pub const DEFAULT_MIN_CHARS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paragraph {
    pub source_url: String,
    pub ordinal: usize,
    pub text: String,
}

pub trait ParagraphExtractor: Send + Sync {
    fn extract(&self, page: &RawPage) -> Vec<Paragraph>;
}

#[derive(Debug, Clone, Copy)]
pub struct HtmlExtractor {
    pub min_chars: usize,
}

impl Default for HtmlExtractor {
    fn default() -> Self {
        Self {
            min_chars: DEFAULT_MIN_CHARS,
        }
    }
}

impl ParagraphExtractor for HtmlExtractor {
    fn extract(&self, page: &RawPage) -> Vec<Paragraph> {
        extract_paragraphs(page, self.min_chars)
    }
}

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "svg", "iframe"];

const BLOCK: &[&str] = &[
    "p", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table", "section",
    "article", "header", "footer", "blockquote", "pre", "hr", "nav", "aside", "main", "dd", "dt",
    "dl", "form", "figure", "figcaption", "body", "html", "head", "title", "td", "th",
];

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Finds `</name` case-insensitively at or after `from`.
fn find_close(lower: &str, name: &str, from: usize) -> Option<usize> {
    let needle = format!("</{name}");
    lower[from..].find(&needle).map(|i| from + i)
}

/// Converts markup into plain text with `\n\n` at block boundaries.
pub fn html_to_text(html: &str) -> String {
    let lower = html.to_ascii_lowercase();
    let mut out = String::with_capacity(html.len());
    let mut text_start = 0;
    let mut pos = 0;

    let flush = |out: &mut String, chunk: &str| {
        out.push_str(&html_escape::decode_html_entities(chunk));
    };

    while let Some(rel) = html[pos..].find('<') {
        let lt = pos + rel;
        let after = &html[lt + 1..];
        // `<` not followed by a tag-ish character is literal text
        let starts_tag = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?');
        if !starts_tag {
            pos = lt + 1;
            continue;
        }
        if after.starts_with("!--") {
            flush(&mut out, &html[text_start..lt]);
            let end = html[lt..].find("-->").map(|i| lt + i + 3).unwrap_or(html.len());
            pos = end;
            text_start = end;
            continue;
        }
        let Some(gt_rel) = html[lt..].find('>') else {
            // unterminated tag: keep the rest as text
            break;
        };
        let gt = lt + gt_rel;
        flush(&mut out, &html[text_start..lt]);
        let inner = &html[lt + 1..gt];
        let name = tag_name(inner);
        let closing = inner.starts_with('/');
        let mut next = gt + 1;
        if !closing && SKIPPED.contains(&name.as_str()) && !inner.ends_with('/') {
            next = match find_close(&lower, &name, gt + 1) {
                Some(c) => html[c..].find('>').map(|i| c + i + 1).unwrap_or(html.len()),
                None => html.len(),
            };
            out.push_str("\n\n");
        } else if name == "br" {
            out.push('\n');
        } else if BLOCK.contains(&name.as_str()) {
            out.push_str("\n\n");
        }
        pos = next;
        text_start = next;
    }
    if text_start < html.len() {
        flush(&mut out, &html[text_start..]);
    }
    out
}

/// Splits plain text into blank-line separated blocks with collapsed
/// whitespace.
pub fn split_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(collapse(&current));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        blocks.push(collapse(&current));
    }
    blocks
}

fn collapse(lines: &[&str]) -> String {
    lines
        .iter()
        .flat_map(|l| l.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Paragraphs of at least `min_chars` characters, ordinals in document order.
/// Pages whose status is not `Ok` yield nothing.
pub fn extract_paragraphs(page: &RawPage, min_chars: usize) -> Vec<Paragraph> {
    let Some(body) = page.body.as_deref().filter(|_| page.status == PageStatus::Ok) else {
        return Vec::new();
    };
    split_blocks(&html_to_text(body))
        .into_iter()
        .filter(|b| b.chars().count() >= min_chars)
        .enumerate()
        .map(|(ordinal, text)| Paragraph {
            source_url: page.url.clone(),
            ordinal,
            text,
        })
        .collect()
}
