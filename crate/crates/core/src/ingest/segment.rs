use serde::{Deserialize, Serialize};

use crate::text::words;

pub const DEFAULT_SEGMENT_WIDTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub parent_doc: usize,
    pub seq: usize,
    pub text: String,
    pub word_count: usize,
}

/// Splits `plaintext` into consecutive, non-overlapping chunks of
/// `segment_width` words; the final chunk holds the remainder. Words inside
/// a chunk are joined by single spaces.
///
/// # Panics
///
/// Panics if `segment_width` is zero.
pub fn segment(plaintext: &str, segment_width: usize, parent_doc: usize) -> Vec<TextSegment> {
    assert!(segment_width >= 1, "segment width must be at least 1");
    let all: Vec<&str> = words(plaintext).collect();
    all.chunks(segment_width)
        .enumerate()
        .map(|(i, chunk)| TextSegment { parent_doc, seq: i + 1, text: chunk.join(" "), word_count: chunk.len() })
        .collect()
}
