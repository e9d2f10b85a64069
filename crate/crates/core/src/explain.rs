//! Explanation generation (Lead-3, greedy extractive oracle, service-backed
//! abstractive summaries) and ROUGE scoring.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::evidence::{segment_sentences, SentenceList};
use crate::text::tokenize;
use crate::veracity::harmonic_mean;

pub const LEAD_SENTENCES: usize = 3;
pub const DEFAULT_ORACLE_SENTENCES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationMethod {
    Gold,
    Lead3,
    Oracle,
    Abstractive,
}

impl ExplanationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplanationMethod::Gold => "gold",
            ExplanationMethod::Lead3 => "lead3",
            ExplanationMethod::Oracle => "oracle",
            ExplanationMethod::Abstractive => "abstractive",
        }
    }
}

/// An explanation as an ordered list of sentences. Always has at least one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub claim_id: String,
    pub method: ExplanationMethod,
    pub sentences: Vec<String>,
}

impl Explanation {
    pub fn new(
        claim_id: impl Into<String>,
        method: ExplanationMethod,
        sentences: Vec<String>,
    ) -> Result<Self> {
        let sentences: Vec<String> = sentences
            .into_iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(Error::InvalidInput("explanation has no sentences".into()));
        }
        Ok(Explanation {
            claim_id: claim_id.into(),
            method,
            sentences,
        })
    }

    /// Segments a journalist-written explanation into sentences.
    pub fn gold(claim_id: impl Into<String>, text: &str) -> Result<Self> {
        Self::new(
            claim_id,
            ExplanationMethod::Gold,
            segment_sentences(text).as_slice().to_vec(),
        )
    }

    /// Sentences joined with single spaces.
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Abstractive summarizer reached through the inference service.
pub trait SummarizerBackend: Send + Sync {
    fn summarize(&self, claim: &str, sentences: &[String]) -> Result<Vec<String>, BackendError>;
}

pub fn lead3(claim_id: &str, article: &SentenceList) -> Result<Explanation> {
    if article.is_empty() {
        return Err(Error::InvalidInput(format!("claim {claim_id}: article has no sentences")));
    }
    Explanation::new(
        claim_id,
        ExplanationMethod::Lead3,
        article.as_slice().iter().take(LEAD_SENTENCES).cloned().collect(),
    )
}

pub fn abstractive(
    claim_id: &str,
    claim: &str,
    article: &SentenceList,
    backend: &dyn SummarizerBackend,
) -> Result<Explanation> {
    if article.is_empty() {
        return Err(Error::InvalidInput(format!("claim {claim_id}: article has no sentences")));
    }
    let summary = backend.summarize(claim, article.as_slice())?;
    Explanation::new(claim_id, ExplanationMethod::Abstractive, summary).map_err(|_| {
        BackendError::Protocol(format!("empty summary for claim {claim_id}")).into()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(matched: usize, candidate_total: usize, reference_total: usize) -> Self {
        if candidate_total == 0 || reference_total == 0 {
            return Prf::default();
        }
        let precision = matched as f64 / candidate_total as f64;
        let recall = matched as f64 / reference_total as f64;
        Prf {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N over token sequences with clipped n-gram counts.
pub fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> Prf {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, c)| refs.get(g).map_or(0, |r| (*c).min(*r)))
        .sum();
    Prf::from_counts(
        matched,
        cand.values().sum(),
        refs.values().sum(),
    )
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<Prf> {
    if n == 0 {
        return Err(Error::InvalidInput("ROUGE-N order must be at least 1".into()));
    }
    Ok(rouge_n_tokens(&tokenize(candidate), &tokenize(reference), n))
}

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> Prf {
    Prf::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub rouge1: Prf,
    pub rouge2: Prf,
    pub rouge_l: Prf,
}

pub fn rouge(candidate: &str, reference: &str) -> RougeScore {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    RougeScore {
        rouge1: rouge_n_tokens(&c, &r, 1),
        rouge2: rouge_n_tokens(&c, &r, 2),
        rouge_l: rouge_l_tokens(&c, &r),
    }
}

/// Result of greedy oracle selection.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSelection {
    /// Sentence indices in the order they were picked.
    pub picks: Vec<usize>,
    /// Objective after each pick.
    pub objectives: Vec<f64>,
}

/// Mean of ROUGE-1 and ROUGE-2 F1 of the selected sentences (joined in
/// document order) against the reference tokens.
pub fn oracle_objective(article: &[Vec<String>], selection: &[usize], reference: &[String]) -> f64 {
    let mut ordered = selection.to_vec();
    ordered.sort_unstable();
    let candidate: Vec<String> = ordered.iter().flat_map(|&i| article[i].iter().cloned()).collect();
    0.5 * (rouge_n_tokens(&candidate, reference, 1).f1 + rouge_n_tokens(&candidate, reference, 2).f1)
}

/// Greedily adds the sentence with the largest objective (lowest index on
/// ties). The first pick is unconditional; later picks need a strictly
/// positive gain.
pub fn greedy_oracle(article: &SentenceList, reference: &str, max_sents: usize) -> Result<OracleSelection> {
    if article.is_empty() {
        return Err(Error::InvalidInput("oracle needs a nonempty article".into()));
    }
    let reference = tokenize(reference);
    if reference.is_empty() {
        return Err(Error::InvalidInput("oracle needs a nonempty reference".into()));
    }
    let sentences: Vec<Vec<String>> = article.iter().map(|(_, s)| tokenize(s)).collect();
    let mut picks: Vec<usize> = Vec::new();
    let mut objectives = Vec::new();
    let mut current = 0.0;
    while picks.len() < max_sents.min(sentences.len()) {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..sentences.len() {
            if picks.contains(&i) {
                continue;
            }
            let mut trial = picks.clone();
            trial.push(i);
            let value = oracle_objective(&sentences, &trial, &reference);
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((i, value));
            }
        }
        let Some((i, value)) = best else { break };
        if !picks.is_empty() && value <= current {
            break;
        }
        picks.push(i);
        objectives.push(value);
        current = value;
    }
    Ok(OracleSelection { picks, objectives })
}

/// Extractive upper bound: greedy ROUGE-maximizing sentence selection
/// against the gold explanation, returned in document order.
pub fn oracle_extractive(article: &SentenceList, gold: &Explanation, max_sents: usize) -> Result<Explanation> {
    let mut picks = greedy_oracle(article, &gold.text(), max_sents)?.picks;
    picks.sort_unstable();
    Explanation::new(
        gold.claim_id.clone(),
        ExplanationMethod::Oracle,
        picks
            .into_iter()
            .filter_map(|i| article.get(i).map(str::to_string))
            .collect(),
    )
}

/// Mean F1 of each ROUGE variant over a set of explanation pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeSummary {
    pub r1_f: f64,
    pub r2_f: f64,
    pub rl_f: f64,
    pub n: usize,
}

/// Scores candidates against golds matched by `claim_id`. Both sides must
/// cover exactly the same claims.
pub fn score_corpus(candidates: &[Explanation], golds: &[Explanation]) -> Result<RougeSummary> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no explanations to score".into()));
    }
    let mut gold_by_id: BTreeMap<&str, &Explanation> = BTreeMap::new();
    for g in golds {
        if gold_by_id.insert(g.claim_id.as_str(), g).is_some() {
            return Err(Error::InvalidInput(format!("duplicate gold for claim {}", g.claim_id)));
        }
    }
    if gold_by_id.len() != candidates.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidates for {} gold explanations",
            candidates.len(),
            gold_by_id.len()
        )));
    }
    let (mut r1, mut r2, mut rl) = (0.0, 0.0, 0.0);
    for c in candidates {
        let gold = gold_by_id
            .remove(c.claim_id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("no gold explanation for claim {}", c.claim_id)))?;
        let s = rouge(&c.text(), &gold.text());
        r1 += s.rouge1.f1;
        r2 += s.rouge2.f1;
        rl += s.rouge_l.f1;
    }
    let n = candidates.len() as f64;
    Ok(RougeSummary {
        r1_f: r1 / n,
        r2_f: r2 / n,
        rl_f: rl / n,
        n: candidates.len(),
    })
}
