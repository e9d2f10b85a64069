//! Sentence segmentation and similarity-based evidence selection.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::data;
use crate::error::{BackendError, Error, Result};
use crate::text::{data_lines, tokenize};

/// Number of evidence sentences handed to the label predictor.
pub const DEFAULT_TOP_K: usize = 5;

/// Document-ordered sentences of one text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceList {
    sentences: Vec<String>,
}

impl SentenceList {
    /// Builds a list from already segmented sentences, dropping blank entries.
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SentenceList {
            sentences: sentences
                .into_iter()
                .map(|s| s.into().trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.sentences.get(index).map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.sentences
    }

    /// `(index, text)` pairs in document order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.sentences.iter().map(String::as_str).enumerate()
    }
}

fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| data_lines(data::ABBREVIATIONS).collect())
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201D}', '\u{2019}', '\u{00BB}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201C}', '\u{2018}', '\u{00AB}'];

fn is_abbreviation(token: &str) -> bool {
    let core = token.trim_start_matches(OPENERS);
    if abbreviations().contains(core) {
        return true;
    }
    // single-letter initials such as "F."
    let mut chars = core.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_uppercase())
}

fn ends_sentence(token: &str, next: Option<&str>) -> bool {
    let core = token.trim_end_matches(CLOSERS);
    let Some(last) = core.chars().last() else {
        return false;
    };
    if !matches!(last, '.' | '!' | '?') {
        return false;
    }
    if last == '.' && is_abbreviation(core) {
        return false;
    }
    match next {
        None => true,
        Some(next) => next
            .trim_start_matches(OPENERS)
            .chars()
            .next()
            .is_some_and(char::is_uppercase),
    }
}

/// Splits `text` at `.`, `!` or `?` (optionally followed by closing quotes or
/// brackets) when followed by whitespace and an uppercase letter, or by the end
/// of the text. Known abbreviations and single-letter initials never split.
pub fn segment_sentences(text: &str) -> SentenceList {
    let mut tokens: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push((s, text.len()));
    }

    let mut sentences = Vec::new();
    let mut sentence_start = None;
    for (t, &(s, e)) in tokens.iter().enumerate() {
        let first = *sentence_start.get_or_insert(s);
        let next = tokens.get(t + 1).map(|&(ns, ne)| &text[ns..ne]);
        if ends_sentence(&text[s..e], next) {
            sentences.push(&text[first..e]);
            sentence_start = None;
        }
    }
    if let Some(first) = sentence_start {
        sentences.push(&text[first..]);
    }
    SentenceList::from_sentences(sentences)
}

/// A vector stored as sorted `(index, value)` pairs with no explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        }
    }

    /// Accumulates duplicate indices and drops zeros. Panics if an index is out of range.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (i, v) in entries {
            assert!((i as usize) < dim, "index {i} out of range for dimension {dim}");
            *acc.entry(i).or_insert(0.0) += v;
        }
        let mut entries: Vec<(u32, f64)> = acc.into_iter().filter(|(_, v)| *v != 0.0).collect();
        entries.sort_unstable_by_key(|(i, _)| *i);
        SparseVector { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            dense[i as usize] = v;
        }
        dense
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn cosine(&self, other: &SparseVector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return Err(Error::InvalidInput("cosine of a zero vector".into()));
        }
        Ok((self.dot(other) / denom).clamp(-1.0, 1.0))
    }
}

/// Cosine similarity of two dense vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::InvalidInput("cosine of a zero vector".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Sentence encoder. Implementations must return one vector per input text,
/// all of the same dimension, and be deterministic for a fixed configuration.
/// Implementations are shared across threads and must tolerate concurrent calls.
pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<SparseVector>, BackendError>;
}

/// 64-bit FNV-1a.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Unigram and bigram features of a token sequence.
pub(crate) fn ngram_features(tokens: &[String]) -> impl Iterator<Item = String> + '_ {
    tokens
        .iter()
        .cloned()
        .chain(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])))
}

/// In-process encoder: hashed unigram+bigram counts weighted by TF-IDF, where
/// document frequencies are taken over the texts of a single `embed` call.
/// Output vectors are L2-normalized (texts with no tokens map to zero).
#[derive(Debug, Clone)]
pub struct HashedTfIdf {
    dim: usize,
}

impl HashedTfIdf {
    pub const DEFAULT_DIM: usize = 1 << 18;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0 && dim <= u32::MAX as usize);
        HashedTfIdf { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn bucket(&self, feature: &str) -> u32 {
        (fnv1a(feature.as_bytes()) % self.dim as u64) as u32
    }
}

impl Default for HashedTfIdf {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl EmbeddingBackend for HashedTfIdf {
    fn embed(&self, texts: &[String]) -> Result<Vec<SparseVector>, BackendError> {
        let counts: Vec<HashMap<u32, f64>> = texts
            .iter()
            .map(|t| {
                let tokens = tokenize(t);
                let mut tf = HashMap::new();
                for f in ngram_features(&tokens) {
                    *tf.entry(self.bucket(&f)).or_insert(0.0) += 1.0;
                }
                tf
            })
            .collect();
        let mut df: HashMap<u32, f64> = HashMap::new();
        for tf in &counts {
            for b in tf.keys() {
                *df.entry(*b).or_insert(0.0) += 1.0;
            }
        }
        let n = texts.len() as f64;
        Ok(counts
            .into_iter()
            .map(|tf| {
                let weighted = tf
                    .into_iter()
                    .map(|(b, c)| (b, c * (((1.0 + n) / (1.0 + df[&b])).ln() + 1.0)));
                let v = SparseVector::from_entries(self.dim, weighted);
                let norm = v.norm();
                if norm == 0.0 {
                    v
                } else {
                    SparseVector::from_entries(self.dim, v.entries.iter().map(|&(i, x)| (i, x / norm)))
                }
            })
            .collect())
    }
}

/// Article sentences ordered by similarity to the claim.
///
/// `ranked[i]` is a sentence index and `scores[i]` its similarity; the first
/// `min(k, ranked.len())` entries are the selected evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRanking {
    pub claim_id: String,
    pub ranked: Vec<usize>,
    pub scores: Vec<f64>,
    pub k: usize,
}

impl EvidenceRanking {
    pub fn selected(&self) -> &[usize] {
        &self.ranked[..self.k.min(self.ranked.len())]
    }

    /// The selected sentence texts, in rank order.
    pub fn selected_texts<'a>(&self, sentences: &'a SentenceList) -> Vec<&'a str> {
        self.selected()
            .iter()
            .filter_map(|&i| sentences.get(i))
            .collect()
    }
}

/// Ranks `sentences` by cosine similarity to `claim`, highest first, ties
/// broken by document order. Sentences whose vector is zero score 0.
pub fn rank_evidence(
    claim_id: &str,
    claim: &str,
    sentences: &SentenceList,
    backend: &dyn EmbeddingBackend,
    k: usize,
) -> Result<EvidenceRanking> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if sentences.is_empty() {
        return Ok(EvidenceRanking {
            claim_id: claim_id.to_string(),
            ranked: vec![],
            scores: vec![],
            k,
        });
    }
    let mut batch = Vec::with_capacity(sentences.len() + 1);
    batch.push(claim.to_string());
    batch.extend(sentences.as_slice().iter().cloned());
    let vectors = backend.embed(&batch)?;
    if vectors.len() != batch.len() {
        return Err(BackendError::Protocol(format!(
            "expected {} embeddings, got {}",
            batch.len(),
            vectors.len()
        ))
        .into());
    }
    let claim_vec = &vectors[0];
    let mut scored = Vec::with_capacity(sentences.len());
    for (i, v) in vectors[1..].iter().enumerate() {
        if v.dim() != claim_vec.dim() {
            return Err(BackendError::Protocol("embeddings differ in dimension".into()).into());
        }
        let score = if v.norm() == 0.0 || claim_vec.norm() == 0.0 {
            0.0
        } else {
            claim_vec.cosine(v)?
        };
        scored.push((i, score));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(EvidenceRanking {
        claim_id: claim_id.to_string(),
        ranked: scored.iter().map(|s| s.0).collect(),
        scores: scored.iter().map(|s| s.1).collect(),
        k,
    })
}
