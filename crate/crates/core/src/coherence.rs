//! Coherence properties of explanations and annotator agreement.
//!
//! For an explanation `E = e_1..e_N` of claim `C`:
//!
//! * strong global coherence: every `e_i` entails `C`;
//! * weak global coherence: no `e_i` contradicts `C`;
//! * local coherence: no `e_i` contradicts any other `e_j`.
//!
//! Relations come from an [`NliBackend`] with the explanation sentence as
//! premise. For claims labelled `false`, a sentence that contradicts the claim
//! is counted as neutral (see [`apply_reassignment`]).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::corpus::VeracityLabel;
use crate::error::{BackendError, Error, Result};
use crate::explain::Explanation;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliRelation {
    Entails,
    Contradicts,
    Neutral,
}

impl NliRelation {
    pub const ALL: [NliRelation; 3] = [NliRelation::Entails, NliRelation::Contradicts, NliRelation::Neutral];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "entails" => Some(NliRelation::Entails),
            "contradicts" => Some(NliRelation::Contradicts),
            "neutral" => Some(NliRelation::Neutral),
            _ => None,
        }
    }
}

/// Directional entailment classifier. Must be deterministic and return one
/// relation per `(premise, hypothesis)` pair, in order.
pub trait NliBackend: Send + Sync {
    fn relate(&self, pairs: &[(String, String)]) -> Result<Vec<NliRelation>, BackendError>;

    /// Identifier used as the backend key in coherence reports.
    fn name(&self) -> String;
}

/// Returns the same relation for every pair.
#[derive(Debug, Clone, Copy)]
pub struct ConstantNli(pub NliRelation);

impl NliBackend for ConstantNli {
    fn relate(&self, pairs: &[(String, String)]) -> Result<Vec<NliRelation>, BackendError> {
        Ok(vec![self.0; pairs.len()])
    }

    fn name(&self) -> String {
        format!("constant-{:?}", self.0).to_lowercase()
    }
}

const NEGATIONS: [&str; 6] = ["not", "no", "never", "none", "neither", "nor"];

/// Rule-based stand-in for an NLI model.
///
/// With `overlap` = fraction of the hypothesis' distinct tokens that also occur
/// in the premise: if `overlap > 0.5` the pair entails when both sides have the
/// same negation polarity and contradicts otherwise; below that it is neutral.
/// Polarity is the parity of negation words (`not`, `no`, `never`, ... and the
/// `t` left by splitting `n't`).
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlapNli;

impl TokenOverlapNli {
    fn polarity(tokens: &[String]) -> bool {
        tokens
            .iter()
            .filter(|t| NEGATIONS.contains(&t.as_str()) || t.as_str() == "t")
            .count()
            % 2
            == 1
    }

    pub fn relate_one(premise: &str, hypothesis: &str) -> NliRelation {
        let p = tokenize(premise);
        let h = tokenize(hypothesis);
        let p_set: HashSet<&String> = p.iter().collect();
        let h_set: HashSet<&String> = h.iter().collect();
        if h_set.is_empty() {
            return NliRelation::Neutral;
        }
        let shared = h_set.iter().filter(|t| p_set.contains(*t)).count();
        if 2 * shared <= h_set.len() {
            NliRelation::Neutral
        } else if Self::polarity(&p) == Self::polarity(&h) {
            NliRelation::Entails
        } else {
            NliRelation::Contradicts
        }
    }
}

impl NliBackend for TokenOverlapNli {
    fn relate(&self, pairs: &[(String, String)]) -> Result<Vec<NliRelation>, BackendError> {
        Ok(pairs.iter().map(|(p, h)| Self::relate_one(p, h)).collect())
    }

    fn name(&self) -> String {
        "token-overlap".into()
    }
}

/// Relations of each explanation sentence to the claim and to each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMatrix {
    /// `to_claim[i]`: premise `e_i`, hypothesis the claim.
    pub to_claim: Vec<NliRelation>,
    /// `(i, j)` with `i != j`: premise `e_i`, hypothesis `e_j`.
    pub pairwise: BTreeMap<(usize, usize), NliRelation>,
    /// Sentence indices whose claim relation was neutralized.
    pub reassigned: BTreeSet<usize>,
}

impl RelationMatrix {
    pub fn new(to_claim: Vec<NliRelation>, pairwise: BTreeMap<(usize, usize), NliRelation>) -> Self {
        RelationMatrix {
            to_claim,
            pairwise,
            reassigned: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.to_claim.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_claim.is_empty()
    }
}

/// Issues `N` claim queries and `N(N-1)` ordered pairwise queries in one batch.
pub fn build_relation_matrix(
    claim: &str,
    explanation: &Explanation,
    backend: &dyn NliBackend,
) -> Result<RelationMatrix> {
    let sents = &explanation.sentences;
    if sents.is_empty() {
        return Err(Error::InvalidInput("explanation has no sentences".into()));
    }
    let n = sents.len();
    let mut pairs: Vec<(String, String)> = sents.iter().map(|s| (s.clone(), claim.to_string())).collect();
    let mut keys = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                keys.push((i, j));
                pairs.push((sents[i].clone(), sents[j].clone()));
            }
        }
    }
    let relations = backend.relate(&pairs)?;
    if relations.len() != pairs.len() {
        return Err(BackendError::Protocol(format!(
            "expected {} relations, got {}",
            pairs.len(),
            relations.len()
        ))
        .into());
    }
    Ok(RelationMatrix::new(
        relations[..n].to_vec(),
        keys.into_iter().zip(relations[n..].iter().copied()).collect(),
    ))
}

/// For `false` claims, turns explanation-to-claim contradictions into neutral
/// relations. Entailments and sentence pairs are left alone.
pub fn apply_reassignment(mut matrix: RelationMatrix, label: VeracityLabel) -> RelationMatrix {
    if label == VeracityLabel::False {
        for (i, rel) in matrix.to_claim.iter_mut().enumerate() {
            if *rel == NliRelation::Contradicts {
                *rel = NliRelation::Neutral;
                matrix.reassigned.insert(i);
            }
        }
    }
    matrix
}

pub fn check_sgc(matrix: &RelationMatrix) -> bool {
    matrix.to_claim.iter().all(|r| *r == NliRelation::Entails)
}

pub fn check_wgc(matrix: &RelationMatrix) -> bool {
    matrix.to_claim.iter().all(|r| *r != NliRelation::Contradicts)
}

pub fn check_lc(matrix: &RelationMatrix) -> bool {
    matrix.pairwise.values().all(|r| *r != NliRelation::Contradicts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceVerdict {
    pub sgc: bool,
    pub wgc: bool,
    pub lc: bool,
    pub reassigned_indices: Vec<usize>,
}

pub fn verdict(matrix: &RelationMatrix) -> CoherenceVerdict {
    CoherenceVerdict {
        sgc: check_sgc(matrix),
        wgc: check_wgc(matrix),
        lc: check_lc(matrix),
        reassigned_indices: matrix.reassigned.iter().copied().collect(),
    }
}

pub fn evaluate_explanation(
    claim: &str,
    label: VeracityLabel,
    explanation: &Explanation,
    backend: &dyn NliBackend,
) -> Result<CoherenceVerdict> {
    let matrix = build_relation_matrix(claim, explanation, backend)?;
    Ok(verdict(&apply_reassignment(matrix, label)))
}

/// Share of explanations satisfying each property, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub sgc: f64,
    pub wgc: f64,
    pub lc: f64,
    pub evaluated: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct CoherenceInput<'a> {
    pub claim: &'a str,
    pub label: VeracityLabel,
    pub explanation: &'a Explanation,
}

/// Records whose backend call fails are excluded and counted in `failed`.
pub fn corpus_coherence(records: &[CoherenceInput<'_>], backend: &dyn NliBackend) -> Result<CoherenceSummary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no explanations to evaluate".into()));
    }
    let (mut sgc, mut wgc, mut lc, mut evaluated, mut failed) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for r in records {
        match evaluate_explanation(r.claim, r.label, r.explanation, backend) {
            Ok(v) => {
                evaluated += 1;
                sgc += usize::from(v.sgc);
                wgc += usize::from(v.wgc);
                lc += usize::from(v.lc);
            }
            Err(Error::Backend(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if evaluated == 0 {
        return Err(Error::InvalidInput(format!(
            "all {failed} explanations failed NLI evaluation"
        )));
    }
    let pct = |c: usize| 100.0 * c as f64 / evaluated as f64;
    Ok(CoherenceSummary {
        sgc: pct(sgc),
        wgc: pct(wgc),
        lc: pct(lc),
        evaluated,
        failed,
    })
}

/// One questionnaire response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub item_id: String,
    pub annotator_id: String,
    pub question_id: String,
    pub arity: usize,
    /// Zero-based index of the chosen response option.
    pub choice: usize,
}

pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<AnnotationRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                path: "annotations".into(),
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedItem {
    pub item_id: String,
    pub ratings: Vec<usize>,
}

/// Items sharing one question arity `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub arity: usize,
    pub items: Vec<AnnotatedItem>,
}

impl AnnotationSet {
    pub fn new(arity: usize, items: Vec<AnnotatedItem>) -> Result<Self> {
        if !(2..=4).contains(&arity) {
            return Err(Error::InvalidInput(format!("question arity {arity} not in 2..=4")));
        }
        if items.is_empty() {
            return Err(Error::InvalidInput("annotation set has no items".into()));
        }
        for item in &items {
            if item.ratings.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "item {} has {} rating(s); at least 2 needed",
                    item.item_id,
                    item.ratings.len()
                )));
            }
            if let Some(bad) = item.ratings.iter().find(|r| **r >= arity) {
                return Err(Error::InvalidInput(format!(
                    "item {}: choice {bad} out of range for arity {arity}",
                    item.item_id
                )));
            }
        }
        Ok(AnnotationSet { arity, items })
    }
}

/// Groups rows into one set per arity. Items are keyed by `(item_id, question_id)`.
pub fn group_annotations(rows: &[AnnotationRow]) -> Result<Vec<AnnotationSet>> {
    let mut by_item: BTreeMap<(String, String), (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    for row in rows {
        let key = (row.item_id.clone(), row.question_id.clone());
        let entry = by_item.entry(key).or_insert_with(|| (row.arity, BTreeMap::new()));
        if entry.0 != row.arity {
            return Err(Error::InvalidInput(format!(
                "item {} question {} has inconsistent arity",
                row.item_id, row.question_id
            )));
        }
        if entry.1.insert(row.annotator_id.clone(), row.choice).is_some() {
            return Err(Error::InvalidInput(format!(
                "annotator {} rated item {} question {} twice",
                row.annotator_id, row.item_id, row.question_id
            )));
        }
    }
    let mut by_arity: BTreeMap<usize, Vec<AnnotatedItem>> = BTreeMap::new();
    for ((item, question), (arity, ratings)) in by_item {
        by_arity.entry(arity).or_default().push(AnnotatedItem {
            item_id: format!("{item}/{question}"),
            ratings: ratings.into_values().collect(),
        });
    }
    by_arity
        .into_iter()
        .map(|(arity, items)| AnnotationSet::new(arity, items))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub arity: usize,
    pub items: usize,
    pub kappa: f64,
    pub overall_agreement: f64,
}

/// Free-marginal kappa from observed agreement and `k` categories.
pub fn kappa_from_agreement(overall_agreement: f64, arity: usize) -> f64 {
    let chance = 1.0 / arity as f64;
    (overall_agreement - chance) / (1.0 - chance)
}

/// Fraction of agreeing rater pairs for one item.
pub fn item_agreement(ratings: &[usize], arity: usize) -> f64 {
    let n = ratings.len();
    let mut counts = vec![0usize; arity];
    for &r in ratings {
        counts[r] += 1;
    }
    let agreeing: usize = counts.iter().map(|c| c * c.saturating_sub(1)).sum();
    agreeing as f64 / (n * (n - 1)) as f64
}

/// Randolph's free-marginal multirater kappa and overall agreement.
pub fn randolph_kappa(set: &AnnotationSet) -> AgreementStats {
    let overall_agreement = set
        .items
        .iter()
        .map(|i| item_agreement(&i.ratings, set.arity))
        .sum::<f64>()
        / set.items.len() as f64;
    AgreementStats {
        arity: set.arity,
        items: set.items.len(),
        kappa: kappa_from_agreement(overall_agreement, set.arity),
        overall_agreement,
    }
}
