//! Word rules shared by input validation, segmentation and answer flagging.
//!
//! A word is a maximal run of non-whitespace characters.

/// Iterates the words of `text` in order.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

pub fn count_words(text: &str) -> usize {
    words(text).count()
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn collapse_whitespace(text: &str) -> String {
    words(text).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_runs_of_non_whitespace() {
        assert_eq!(count_words("a b  c\n d"), 4);
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words(" \t\n "), 0);
        assert_eq!(count_words("one"), 1);
        assert_eq!(count_words("tab\tsep\u{00a0}nbsp"), 3);
    }

    #[test]
    fn collapses() {
        assert_eq!(collapse_whitespace("  a \n\n b\tc "), "a b c");
    }
}
