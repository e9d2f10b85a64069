//! Data assets compiled into the library.

/// Raw-to-standard veracity label mapping (`raw_label<TAB>standard_label`).
pub const LABEL_MAP_TSV: &str = include_str!("../data/label_map.tsv");

/// The 65 manually curated public health terms.
pub const LEXICON_SUPPLEMENT: &str = include_str!("../data/lexicon_supplement.txt");

/// A general health and health policy glossary used as the default term list.
pub const HEALTH_GLOSSARY: &str = include_str!("../data/health_glossary.txt");

/// Dale-Chall list of familiar words.
pub const DALE_CHALL_EASY_WORDS: &str = include_str!("../data/dale_chall_easy_words.txt");

/// Period-terminated tokens that never end a sentence.
pub const ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");
