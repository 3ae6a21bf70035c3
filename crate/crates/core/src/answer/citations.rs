//! `[n]` citation markers: extraction, range checking and coverage.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::sentences::split_sentences;
use crate::text::collapse_whitespace;

static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[(\d+)\]").unwrap());
static MARKER_WITH_SPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s*\[\d+\]").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSentence {
    pub text: String,
    pub citations: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedCitations {
    pub sentences: Vec<AnswerSentence>,
    pub out_of_range: BTreeSet<usize>,
}

/// Removes every `[n]` marker together with the whitespace before it.
pub fn strip_markers(text: &str) -> String {
    MARKER_WITH_SPACE.replace_all(text, "").into_owned()
}

/// Splits `raw` into sentences and pulls out their `[n]` markers.
///
/// Numbers in `1..=num_docs` become citations; anything else is reported in
/// `out_of_range`. A fragment that is nothing but markers and punctuation
/// (e.g. a stray `[2].`) is folded into the sentence before it, or the one
/// after it when it leads the text.
pub fn parse_citations(raw: &str, num_docs: usize) -> ParsedCitations {
    let mut out = ParsedCitations::default();
    let mut pending: Option<AnswerSentence> = None;
    for sentence in split_sentences(raw) {
        let mut citations = BTreeSet::new();
        for caps in MARKER.captures_iter(&sentence) {
            let n = caps[1].parse::<usize>().unwrap_or(usize::MAX);
            if (1..=num_docs).contains(&n) {
                citations.insert(n);
            } else {
                out.out_of_range.insert(n);
            }
        }
        let text = collapse_whitespace(&strip_markers(&sentence));
        let marker_only = !text.chars().any(char::is_alphanumeric);
        if marker_only {
            match out.sentences.last_mut().or(pending.as_mut()) {
                Some(prev) => {
                    prev.text.push_str(&text);
                    prev.citations.extend(citations);
                }
                None => pending = Some(AnswerSentence { text, citations }),
            }
            continue;
        }
        let mut current = AnswerSentence { text, citations };
        if let Some(lead) = pending.take() {
            current.text = collapse_whitespace(&format!("{} {}", lead.text, current.text));
            current.citations.extend(lead.citations);
        }
        out.sentences.push(current);
    }
    if let Some(lead) = pending {
        out.sentences.push(lead);
    }
    out
}

/// Documents in `1..=num_docs` that no sentence cites.
pub fn find_uncited_docs(sentences: &[AnswerSentence], num_docs: usize) -> BTreeSet<usize> {
    let cited: BTreeSet<usize> = sentences.iter().flat_map(|s| s.citations.iter().copied()).collect();
    (1..=num_docs).filter(|d| !cited.contains(d)).collect()
}
