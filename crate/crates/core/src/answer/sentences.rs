use std::sync::LazyLock;

use regex::Regex;

/// Tokens ending in '.' that never close a sentence.
const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "etc.", "vs.", "dr.", "u.s."];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')'];

static LEADING_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[\d+\]").unwrap());

fn is_abbreviation(text: &str, dot: usize) -> bool {
    let start = text[..dot].rfind(char::is_whitespace).map_or(0, |i| i + 1);
    let token = text[start..=dot].trim_start_matches(['(', '"', '\'', '\u{201c}']);
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(token))
}

/// Splits text into sentences.
///
/// A sentence ends at a run of '.', '!' or '?' (plus closing quotes or
/// parentheses) followed by whitespace or the end of text. Citation markers
/// like `[2]` right after the punctuation stay with the sentence they follow.
/// A '.' ending one of a fixed set of abbreviations never ends a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut pos = 0;
    while let Some(off) = text[pos..].find(TERMINALS) {
        let punct = pos + off;
        let mut end = punct + text[punct..].len() - text[punct..].trim_start_matches(TERMINALS).len();
        end += text[end..].len() - text[end..].trim_start_matches(CLOSERS).len();
        while let Some(m) = LEADING_MARKER.find(&text[end..]) {
            end += m.end();
        }
        let at_boundary = text[end..].chars().next().is_none_or(char::is_whitespace);
        let single_dot = &text[punct..punct + 1] == "." && !text[punct + 1..].starts_with(TERMINALS);
        if at_boundary && !(single_dot && is_abbreviation(text, punct)) {
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = end;
        }
        pos = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}
