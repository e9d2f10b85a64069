//! Shared word tokenization.
//!
//! Every text-level component (lexicon matching, ROUGE, hashed features,
//! readability word counts, the NLI stub) uses the same rule: lowercase,
//! then split on runs of non-alphanumeric characters.

/// Lowercased alphanumeric tokens of `text`, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Parses a one-entry-per-line asset: trims lines, drops blanks and `#` comments.
pub(crate) fn data_lines(contents: &str) -> impl Iterator<Item = &str> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("Anti-vaxxer claims: COVID-19 isn't real!"),
            vec!["anti", "vaxxer", "claims", "covid", "19", "isn", "t", "real"]
        );
    }

    #[test]
    fn empty_and_symbol_only_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" -- !! ").is_empty());
    }

    #[test]
    fn counts_scalar_values_not_bytes() {
        assert_eq!(char_len("“flu”"), 5);
        assert_eq!("“flu”".len(), 9);
    }
}
