//! Flesch reading ease and Dale-Chall readability scores.
//!
//! Sentences come from [`segment_sentences`], words from [`tokenize`].
//! Syllables are estimated by counting vowel groups (`a e i o u y`), minus one
//! for a terminal silent `e` when that leaves at least one group; every word
//! has at least one syllable.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{Error, Result};
use crate::evidence::segment_sentences;
use crate::text::{data_lines, tokenize};

/// Percentage of difficult words above which the Dale-Chall adjustment applies.
pub const DALE_CHALL_ADJUSTMENT_THRESHOLD: f64 = 5.0;
pub const DALE_CHALL_ADJUSTMENT: f64 = 3.6365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TextStats {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
    pub difficult_words: usize,
}

/// Familiar-word list for Dale-Chall.
#[derive(Debug, Clone)]
pub struct EasyWords {
    words: HashSet<String>,
}

impl EasyWords {
    /// Each entry is tokenized like running text, so `don't` contributes `don` and `t`.
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = entries
            .into_iter()
            .flat_map(|e| tokenize(e.as_ref()))
            .collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("easy-word list is empty".into()));
        }
        Ok(EasyWords { words })
    }

    pub fn parse(contents: &str) -> Result<Self> {
        Self::new(data_lines(contents))
    }

    pub fn bundled() -> &'static EasyWords {
        static WORDS: OnceLock<EasyWords> = OnceLock::new();
        WORDS.get_or_init(|| EasyWords::parse(data::DALE_CHALL_EASY_WORDS).expect("bundled list"))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Numbers are never difficult; regular inflections (-s, -es, -ed, -ing)
    /// of a listed word are easy.
    pub fn is_easy(&self, word: &str) -> bool {
        let word = word.to_lowercase();
        if word.chars().all(|c| c.is_numeric()) || self.words.contains(&word) {
            return true;
        }
        ["ing", "ed", "es", "s"].iter().any(|suffix| {
            word.strip_suffix(suffix)
                .is_some_and(|stem| !stem.is_empty() && self.words.contains(stem))
        })
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn count_syllables(word: &str) -> usize {
    let chars: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    let silent_e = n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]);
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

pub fn text_stats(text: &str, easy: Option<&EasyWords>) -> TextStats {
    let words = tokenize(text);
    TextStats {
        sentences: segment_sentences(text).len(),
        words: words.len(),
        syllables: words.iter().map(|w| count_syllables(w)).sum(),
        difficult_words: easy.map_or(0, |e| words.iter().filter(|w| !e.is_easy(w)).count()),
    }
}

fn check_counts(stats: &TextStats) -> Result<()> {
    if stats.sentences == 0 || stats.words == 0 {
        return Err(Error::InvalidInput(
            "readability needs at least one sentence and one word".into(),
        ));
    }
    Ok(())
}

pub fn flesch_reading_ease_from_stats(stats: &TextStats) -> Result<f64> {
    check_counts(stats)?;
    let words = stats.words as f64;
    Ok(206.835
        - 1.015 * (words / stats.sentences as f64)
        - 84.6 * (stats.syllables as f64 / words))
}

pub fn dale_chall_from_stats(stats: &TextStats) -> Result<f64> {
    check_counts(stats)?;
    let words = stats.words as f64;
    let pct_difficult = 100.0 * stats.difficult_words as f64 / words;
    let mut score = 0.1579 * pct_difficult + 0.0496 * (words / stats.sentences as f64);
    if pct_difficult > DALE_CHALL_ADJUSTMENT_THRESHOLD {
        score += DALE_CHALL_ADJUSTMENT;
    }
    Ok(score)
}

/// Flesch reading ease; higher is easier. Unbounded in both directions.
pub fn flesch_kincaid_reading_ease(text: &str) -> Result<f64> {
    flesch_reading_ease_from_stats(&text_stats(text, None))
}

/// Raw (unadjusted-to-grade) Dale-Chall score.
pub fn dale_chall(text: &str, easy: &EasyWords) -> Result<f64> {
    dale_chall_from_stats(&text_stats(text, Some(easy)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub fk_mean: f64,
    pub fk_std: f64,
    pub dc_mean: f64,
    pub dc_std: f64,
    pub n_texts: usize,
    pub skipped: usize,
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation of both scores over `texts`.
/// Texts without a sentence or word are skipped and counted.
pub fn corpus_readability<S: AsRef<str>>(texts: &[S], easy: &EasyWords) -> Result<ReadabilityReport> {
    if texts.is_empty() {
        return Err(Error::InvalidInput("readability corpus is empty".into()));
    }
    let mut fk = Vec::with_capacity(texts.len());
    let mut dc = Vec::with_capacity(texts.len());
    let mut skipped = 0;
    for text in texts {
        let stats = text_stats(text.as_ref(), Some(easy));
        match (flesch_reading_ease_from_stats(&stats), dale_chall_from_stats(&stats)) {
            (Ok(f), Ok(d)) => {
                fk.push(f);
                dc.push(d);
            }
            _ => skipped += 1,
        }
    }
    if fk.is_empty() {
        return Err(Error::InvalidInput("no scorable texts in readability corpus".into()));
    }
    let (fk_mean, fk_std) = mean_std(&fk);
    let (dc_mean, dc_std) = mean_std(&dc);
    Ok(ReadabilityReport {
        fk_mean,
        fk_std,
        dc_mean,
        dc_std,
        n_texts: fk.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllables() {
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("free"), 1);
        assert_eq!(count_syllables("vaccine"), 2);
        assert_eq!(count_syllables("hospital"), 3);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("2020"), 1);
    }

    #[test]
    fn reading_ease_of_the_cat_sat() {
        let score = flesch_kincaid_reading_ease("The cat sat.").unwrap();
        assert!((score - 119.19).abs() < 1e-9, "{score}");
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(flesch_kincaid_reading_ease("").is_err());
        assert!(flesch_kincaid_reading_ease("  ... !!").is_err());
        assert!(dale_chall("", EasyWords::bundled()).is_err());
        assert!(EasyWords::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn duplication_leaves_scores_unchanged() {
        let one = "Vaccines are tested for safety before approval.";
        let two = format!("{one} {one}");
        let f1 = flesch_kincaid_reading_ease(one).unwrap();
        let f2 = flesch_kincaid_reading_ease(&two).unwrap();
        assert!((f1 - f2).abs() < 1e-9);
        let easy = EasyWords::bundled();
        assert!((dale_chall(one, easy).unwrap() - dale_chall(&two, easy).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn dale_chall_fixtures() {
        let easy = EasyWords::new(["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]).unwrap();
        let all_easy = dale_chall("a b c d e f g h i j.", &easy).unwrap();
        assert!((all_easy - 0.496).abs() < 1e-9, "{all_easy}");
        let all_hard = dale_chall("k l m n o p q r s t.", &easy).unwrap();
        assert!((all_hard - 19.9225).abs() < 1e-9, "{all_hard}");
    }

    #[test]
    fn inflections_of_easy_words() {
        let easy = EasyWords::bundled();
        assert!(easy.is_easy("walk"));
        assert!(easy.is_easy("walked"));
        assert!(easy.is_easy("walking"));
        assert!(easy.is_easy("boxes"));
        assert!(easy.is_easy("Cats"));
        assert!(easy.is_easy("1995"));
        assert!(!easy.is_easy("epidemiology"));
    }

    #[test]
    fn corpus_aggregates() {
        let easy = EasyWords::bundled();
        let single = corpus_readability(&["The cat sat."], easy).unwrap();
        assert_eq!(single.fk_std, 0.0);
        assert_eq!(single.n_texts, 1);

        let a = "The cat sat.";
        let b = "Hospitalization associated with influenza complications increased.";
        let fa = flesch_kincaid_reading_ease(a).unwrap();
        let fb = flesch_kincaid_reading_ease(b).unwrap();
        let r = corpus_readability(&[a, b, ""], easy).unwrap();
        assert!((r.fk_mean - (fa + fb) / 2.0).abs() < 1e-9);
        assert!((r.fk_std - (fa - fb).abs() / 2.0).abs() < 1e-9);
        assert_eq!((r.n_texts, r.skipped), (2, 1));

        assert!(corpus_readability::<&str>(&[], easy).is_err());
        assert!(corpus_readability(&["", "?"], easy).is_err());
    }
}
