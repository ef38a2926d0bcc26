//! Tokenization and character-offset helpers.
//!
//! All text offsets in the crate count Unicode scalar values (characters),
//! not bytes. Tokens are case-folded maximal runs of alphanumeric characters;
//! there is no stemming and there are no stop words.

/// A token extracted from a stored text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Case-folded token text.
    pub text: String,
    /// Character offset of the first character, local to the input string.
    pub start: usize,
    /// Character offset one past the last character.
    pub end: usize,
}

/// Splits `s` into case-folded maximal alphanumeric runs with local
/// character offsets.
pub fn tokenize(s: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (pos, ch) in s.chars().enumerate() {
        if ch.is_alphanumeric() {
            let (_, buf) = current.get_or_insert_with(|| (pos, String::new()));
            buf.extend(ch.to_lowercase());
        } else if let Some((start, buf)) = current.take() {
            tokens.push(Token {
                text: buf,
                start,
                end: pos,
            });
        }
    }
    let total = s.chars().count();
    if let Some((start, buf)) = current.take() {
        tokens.push(Token {
            text: buf,
            start,
            end: total,
        });
    }
    tokens
}

/// Number of characters in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Converts a byte offset into `s` (which must fall on a character boundary)
/// to a character offset.
pub fn byte_to_char(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}

/// Returns the byte range corresponding to the character range
/// `[start, end)` of `s`.
pub fn char_range_to_bytes(s: &str, start: usize, end: usize) -> (usize, usize) {
    debug_assert!(start <= end);
    let mut it = s.char_indices();
    let b0 = it
        .by_ref()
        .nth(start)
        .map(|(b, _)| b)
        .unwrap_or(s.len());
    if end == start {
        return (b0, b0);
    }
    let b1 = s
        .char_indices()
        .nth(end)
        .map(|(b, _)| b)
        .unwrap_or(s.len());
    (b0, b1)
}
