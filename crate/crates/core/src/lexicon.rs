//! Public health term lexicon and the health-relatedness corpus filter.
//!
//! A claim entry is kept when its article text or its claim text mentions
//! more than [`HEALTH_TERM_THRESHOLD`] distinct lexicon terms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ClaimRecord;
use crate::data;
use crate::error::{Error, Result};
use crate::text::{data_lines, tokenize};

/// Strict lower bound on distinct matched terms.
pub const HEALTH_TERM_THRESHOLD: usize = 3;

/// A named list of terms, one per line.
#[derive(Debug, Clone)]
pub struct TermList {
    pub name: String,
    pub terms: Vec<String>,
}

impl TermList {
    pub fn parse(name: impl Into<String>, contents: &str) -> Self {
        TermList {
            name: name.into(),
            terms: data_lines(contents).map(str::to_string).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Self::parse(name, &contents))
    }

    pub fn bundled_glossary() -> Self {
        Self::parse("health_glossary", data::HEALTH_GLOSSARY)
    }
}

/// The 65 manually added terms.
pub fn bundled_supplement() -> Vec<String> {
    data_lines(data::LEXICON_SUPPLEMENT).map(str::to_string).collect()
}

#[derive(Debug, Clone)]
pub struct HealthLexicon {
    terms: BTreeSet<String>,
    source_counts: BTreeMap<String, usize>,
    // first token -> (term, full token sequence)
    by_first_token: HashMap<String, Vec<(String, Vec<String>)>>,
}

/// Lowercases and collapses internal whitespace. Returns `None` for entries
/// with no alphanumeric content, which could never match.
pub fn normalize_term(term: &str) -> Option<String> {
    let normalized = term
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if tokenize(&normalized).is_empty() {
        None
    } else {
        Some(normalized)
    }
}

pub fn build_lexicon(term_lists: &[TermList], supplements: &[String]) -> Result<HealthLexicon> {
    let mut terms = BTreeSet::new();
    let mut source_counts = BTreeMap::new();
    let mut add = |name: &str, items: &[String]| {
        let normalized: BTreeSet<String> = items.iter().filter_map(|t| normalize_term(t)).collect();
        *source_counts.entry(name.to_string()).or_insert(0) += normalized.len();
        terms.extend(normalized);
    };
    for list in term_lists {
        add(&list.name, &list.terms);
    }
    if !supplements.is_empty() {
        add("supplement", supplements);
    }
    if terms.is_empty() {
        return Err(Error::InvalidInput("health lexicon is empty".into()));
    }

    let mut by_first_token: HashMap<String, Vec<(String, Vec<String>)>> = HashMap::new();
    for term in &terms {
        let tokens = tokenize(term);
        by_first_token
            .entry(tokens[0].clone())
            .or_default()
            .push((term.clone(), tokens));
    }
    Ok(HealthLexicon {
        terms,
        source_counts,
        by_first_token,
    })
}

impl HealthLexicon {
    /// The bundled glossary plus the manual supplement.
    pub fn bundled() -> Self {
        build_lexicon(&[TermList::bundled_glossary()], &bundled_supplement())
            .expect("bundled lexicon is nonempty")
    }

    pub fn terms(&self) -> &BTreeSet<String> {
        &self.terms
    }

    pub fn source_counts(&self) -> &BTreeMap<String, usize> {
        &self.source_counts
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LexiconMatch {
    pub matched_terms: BTreeSet<String>,
}

impl LexiconMatch {
    pub fn count(&self) -> usize {
        self.matched_terms.len()
    }
}

/// Distinct lexicon terms occurring in `text` as whole-token subsequences.
pub fn match_terms(text: &str, lex: &HealthLexicon) -> LexiconMatch {
    let tokens = tokenize(text);
    let mut matched_terms = BTreeSet::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Some(candidates) = lex.by_first_token.get(tok) else {
            continue;
        };
        for (term, term_tokens) in candidates {
            if tokens[i..].starts_with(term_tokens) {
                matched_terms.insert(term.clone());
            }
        }
    }
    LexiconMatch { matched_terms }
}

/// Per-record filter decision, serialized as one line of the filter audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterAudit {
    pub claim_id: String,
    pub article_count: usize,
    pub claim_count: usize,
    pub passed: bool,
}

pub fn passes_health_filter(record: &ClaimRecord, lex: &HealthLexicon) -> FilterAudit {
    let article_count = match_terms(&record.article_text, lex).count();
    let claim_count = match_terms(&record.claim_text, lex).count();
    FilterAudit {
        claim_id: record.claim_id.clone(),
        article_count,
        claim_count,
        passed: article_count > HEALTH_TERM_THRESHOLD || claim_count > HEALTH_TERM_THRESHOLD,
    }
}
