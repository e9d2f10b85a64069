//! Claim records, veracity label standardization and structural cleaning.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{Error, Result};
use crate::text::char_len;

pub const MIN_CLAIM_CHARS: usize = 25;
pub const MAX_CLAIM_CHARS: usize = 400;
pub const MIN_EXPLANATION_CHARS: usize = 25;

/// Headline prefixes that mark news entries whose veracity cannot be assumed.
pub const EXCLUDED_HEADLINE_PREFIXES: [&str; 4] =
    ["AP EXCLUSIVE", "Correction", "AP Interview", "AP FACT CHECK"];

/// The standardized 4-way veracity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VeracityLabel {
    True,
    False,
    Mixture,
    Unproven,
}

impl VeracityLabel {
    /// Canonical class order. Probability vectors are indexed in this order.
    pub const ALL: [VeracityLabel; 4] = [
        VeracityLabel::True,
        VeracityLabel::False,
        VeracityLabel::Mixture,
        VeracityLabel::Unproven,
    ];

    pub fn index(self) -> usize {
        match self {
            VeracityLabel::True => 0,
            VeracityLabel::False => 1,
            VeracityLabel::Mixture => 2,
            VeracityLabel::Unproven => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VeracityLabel::True => "true",
            VeracityLabel::False => "false",
            VeracityLabel::Mixture => "mixture",
            VeracityLabel::Unproven => "unproven",
        }
    }
}

impl fmt::Display for VeracityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VeracityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown veracity label `{s}`")))
    }
}

/// The eight sites claims were collected from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSite {
    ApNews,
    FactCheck,
    FullFact,
    HealthNewsReview,
    Politifact,
    Reuters,
    Snopes,
    TruthOrFiction,
}

impl SourceSite {
    /// News sites whose headlines are taken as verified claims.
    pub fn is_news(self) -> bool {
        matches!(self, SourceSite::ApNews | SourceSite::Reuters)
    }
}

/// A scraped entry before label standardization and cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    #[serde(default)]
    pub claim_id: String,
    #[serde(default)]
    pub claim_text: String,
    #[serde(default)]
    pub article_text: String,
    #[serde(default)]
    pub explanation_text: String,
    /// Free-form label as published by the source; empty for news headlines.
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_published: Option<NaiveDate>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub fact_checkers: Vec<String>,
    pub source_site: SourceSite,
    #[serde(default)]
    pub source_urls: Vec<String>,
}

/// A curated claim: label standardized, length and form constraints satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub claim_text: String,
    pub article_text: String,
    pub explanation_text: String,
    pub label: VeracityLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_published: Option<NaiveDate>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub fact_checkers: Vec<String>,
    pub source_site: SourceSite,
    #[serde(default)]
    pub source_urls: Vec<String>,
}

impl ClaimRecord {
    /// Re-checks the record invariants (used when reading curated corpora).
    pub fn check(&self) -> std::result::Result<(), DropReason> {
        if self.claim_id.trim().is_empty() {
            return Err(DropReason::MissingId);
        }
        check_texts(&self.claim_text, &self.explanation_text)
    }
}

impl From<ClaimRecord> for RawRecord {
    fn from(r: ClaimRecord) -> Self {
        RawRecord {
            claim_id: r.claim_id,
            claim_text: r.claim_text,
            article_text: r.article_text,
            explanation_text: r.explanation_text,
            label: r.label.as_str().to_string(),
            date_published: r.date_published,
            tags: r.tags,
            fact_checkers: r.fact_checkers,
            source_site: r.source_site,
            source_urls: r.source_urls,
        }
    }
}

/// Why a record was dropped during curation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MissingId,
    DuplicateId,
    UnmappableLabel,
    ExcludedHeadline,
    TooShortClaim,
    TooLongClaim,
    ShortExplanation,
    Interrogative,
    NotHealthRelated,
}

impl DropReason {
    pub const ALL: [DropReason; 9] = [
        DropReason::MissingId,
        DropReason::DuplicateId,
        DropReason::UnmappableLabel,
        DropReason::ExcludedHeadline,
        DropReason::TooShortClaim,
        DropReason::TooLongClaim,
        DropReason::ShortExplanation,
        DropReason::Interrogative,
        DropReason::NotHealthRelated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::MissingId => "missing_id",
            DropReason::DuplicateId => "duplicate_id",
            DropReason::UnmappableLabel => "unmappable_label",
            DropReason::ExcludedHeadline => "excluded_headline",
            DropReason::TooShortClaim => "too_short_claim",
            DropReason::TooLongClaim => "too_long_claim",
            DropReason::ShortExplanation => "short_explanation",
            DropReason::Interrogative => "interrogative",
            DropReason::NotHealthRelated => "not_health_related",
        }
    }
}

/// Mapping from source-specific verdict strings to the 4-way scheme.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    entries: HashMap<String, VeracityLabel>,
}

impl LabelMap {
    /// Parses a two-column TSV (`raw_label`, `standard_label`); `#` lines are comments.
    pub fn from_tsv(contents: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (lineno, line) in contents.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (raw, standard) = line.split_once('\t').ok_or_else(|| {
                Error::InvalidInput(format!("label map line {}: expected two columns", lineno + 1))
            })?;
            let label: VeracityLabel = standard.trim().parse()?;
            let key = normalize_key(raw);
            if let Some(prev) = entries.insert(key.clone(), label) {
                if prev != label {
                    return Err(Error::InvalidInput(format!(
                        "label map line {}: `{key}` mapped to both {prev} and {label}",
                        lineno + 1
                    )));
                }
            }
        }
        Ok(LabelMap { entries })
    }

    /// The bundled mapping.
    pub fn bundled() -> &'static LabelMap {
        static MAP: OnceLock<LabelMap> = OnceLock::new();
        MAP.get_or_init(|| LabelMap::from_tsv(data::LABEL_MAP_TSV).expect("bundled label map"))
    }

    /// `None` means the raw label cannot be reduced to the 4-way scheme.
    pub fn normalize(&self, raw: &str) -> Option<VeracityLabel> {
        self.entries.get(&normalize_key(raw)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, VeracityLabel)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn normalize_key(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Standardizes `raw` with the bundled label map.
pub fn normalize_label(raw: &str) -> Option<VeracityLabel> {
    LabelMap::bundled().normalize(raw)
}

/// Labels a news headline: verified unless it carries an excluded prefix.
pub fn assign_news_label(record: &RawRecord) -> Result<std::result::Result<VeracityLabel, DropReason>> {
    if !record.source_site.is_news() {
        return Err(Error::InvalidInput(format!(
            "record {} is not from a news site ({:?})",
            record.claim_id, record.source_site
        )));
    }
    if EXCLUDED_HEADLINE_PREFIXES
        .iter()
        .any(|p| record.claim_text.starts_with(p))
    {
        return Ok(Err(DropReason::ExcludedHeadline));
    }
    Ok(Ok(VeracityLabel::True))
}

/// Resolves the standardized label for any raw record.
pub fn resolve_label(
    record: &RawRecord,
    map: &LabelMap,
) -> std::result::Result<VeracityLabel, DropReason> {
    if record.source_site.is_news() {
        assign_news_label(record).expect("news site checked")
    } else {
        map.normalize(&record.label).ok_or(DropReason::UnmappableLabel)
    }
}

/// Applies the length and statement-form filters and builds the curated record.
pub fn clean(raw: RawRecord, label: VeracityLabel) -> std::result::Result<ClaimRecord, DropReason> {
    let claim_text = raw.claim_text.trim().to_string();
    let explanation_text = raw.explanation_text.trim().to_string();
    if raw.claim_id.trim().is_empty() {
        return Err(DropReason::MissingId);
    }
    check_texts(&claim_text, &explanation_text)?;
    Ok(ClaimRecord {
        claim_id: raw.claim_id,
        claim_text,
        article_text: raw.article_text,
        explanation_text,
        label,
        date_published: raw.date_published,
        tags: raw.tags,
        fact_checkers: raw.fact_checkers,
        source_site: raw.source_site,
        source_urls: raw.source_urls,
    })
}

fn check_texts(claim: &str, explanation: &str) -> std::result::Result<(), DropReason> {
    let claim_len = char_len(claim.trim());
    if claim_len < MIN_CLAIM_CHARS {
        return Err(DropReason::TooShortClaim);
    }
    if claim_len > MAX_CLAIM_CHARS {
        return Err(DropReason::TooLongClaim);
    }
    if char_len(explanation.trim()) < MIN_EXPLANATION_CHARS {
        return Err(DropReason::ShortExplanation);
    }
    if ends_with_question(claim) || ends_with_question(explanation) {
        return Err(DropReason::Interrogative);
    }
    Ok(())
}

const CLOSING_QUOTES: [char; 6] = ['"', '\'', '\u{201D}', '\u{2019}', '\u{00BB}', '`'];

/// True if the last character, ignoring trailing whitespace and closing quotes, is `?`.
pub fn ends_with_question(text: &str) -> bool {
    text.trim_end_matches(|c: char| c.is_whitespace() || CLOSING_QUOTES.contains(&c))
        .ends_with('?')
}
