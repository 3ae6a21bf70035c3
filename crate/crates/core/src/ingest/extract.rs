//! HTML to plaintext reduction.
//!
//! Non-content subtrees (scripts, styles, navigation, page header and
//! footer) are dropped, block-level elements become line boundaries and
//! whitespace is collapsed within each line. Entities are decoded by the
//! HTML parser.

use ego_tree::NodeRef;
use scraper::{Html, Node};
use thiserror::Error;

use crate::text::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("page has no extractable text")]
pub struct EmptyContent;

const SKIPPED: &[&str] = &[
    "script", "style", "nav", "header", "footer", "noscript", "template", "head", "svg", "iframe", "canvas", "object",
];

const BLOCKS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "body",
    "br",
    "caption",
    "dd",
    "details",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "hr",
    "html",
    "li",
    "main",
    "ol",
    "p",
    "pre",
    "section",
    "summary",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "tr",
    "ul",
];

pub fn extract_plaintext(html: &str) -> Result<String, EmptyContent> {
    let document = Html::parse_document(html);
    let mut raw = String::with_capacity(html.len() / 2);
    walk(document.tree.root(), &mut raw);
    finish(&raw)
}

/// Normalizes a `text/plain` body the same way extracted HTML is.
pub fn normalize_plaintext(text: &str) -> Result<String, EmptyContent> {
    finish(text)
}

fn finish(raw: &str) -> Result<String, EmptyContent> {
    let lines: Vec<String> = raw.lines().map(collapse_whitespace).filter(|line| !line.is_empty()).collect();
    if lines.is_empty() { Err(EmptyContent) } else { Ok(lines.join("\n")) }
}

fn walk(node: NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        // line breaks inside text are plain whitespace; only blocks end lines
        Node::Text(text) => out.extend(text.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c })),
        Node::Element(element) => {
            let name = element.name();
            if SKIPPED.contains(&name) {
                return;
            }
            let block = BLOCKS.contains(&name);
            if block {
                out.push('\n');
            }
            for child in node.children() {
                walk(child, out);
            }
            if block {
                out.push('\n');
            }
        }
        Node::Document | Node::Fragment => {
            for child in node.children() {
                walk(child, out);
            }
        }
        _ => {}
    }
}
