use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::artifacts::{read_json, read_jsonl, read_jsonl_lines, write_json, write_jsonl};
use super::config::{BackendSpec, EvalSplit, PipelineConfig};
use super::split::{split, Split, SplitAssignment, SplitEntry};
use super::Backends;
use crate::coherence::{corpus_coherence, group_annotations, randolph_kappa, read_annotations, AgreementStats, CoherenceInput, CoherenceSummary};
use crate::corpus::{clean, resolve_label, ClaimRecord, DropReason, LabelMap, RawRecord, VeracityLabel};
use crate::error::{BackendError, Error, Result};
use crate::evidence::{rank_evidence, segment_sentences, EvidenceRanking};
use crate::explain::{abstractive, lead3, oracle_extractive, score_corpus, Explanation, ExplanationMethod, RougeSummary};
use crate::lexicon::{build_lexicon, bundled_supplement, passes_health_filter, FilterAudit, HealthLexicon, TermList};
use crate::readability::{corpus_readability, mean_std, EasyWords, ReadabilityReport};
use crate::text::data_lines;
use crate::veracity::{evaluate, train_baseline, ClassificationMetrics, ClassifierBackend, LabelDistribution, TrainingExample};

pub const CORPUS: &str = "corpus.jsonl";
pub const DROPS: &str = "drops.jsonl";
pub const FILTER_AUDIT: &str = "filter_audit.jsonl";
pub const SPLITS: &str = "splits.jsonl";
pub const CURATE_REPORT: &str = "curate_report.json";
pub const RANKINGS: &str = "rankings.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const VERACITY_METRICS: &str = "veracity_metrics.json";
pub const EXPLANATIONS: &str = "explanations.jsonl";
pub const ROUGE: &str = "rouge.json";
pub const COHERENCE: &str = "coherence.json";
pub const REPORT: &str = "report.json";
pub const REPORT_META: &str = "report_meta.json";

const SERVICE_BATCH: usize = 32;

fn out(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

// ---------------------------------------------------------------- curate

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub claim_id: String,
    /// One-based line in the raw input.
    pub line: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconInfo {
    pub terms: usize,
    pub sources: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCounts {
    pub article: MeanStd,
    pub claim: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurateReport {
    pub input_records: usize,
    pub kept: usize,
    pub drops: BTreeMap<DropReason, usize>,
    pub labels: BTreeMap<VeracityLabel, usize>,
    pub lexicon: LexiconInfo,
    /// Distinct lexicon terms per record, over records that reached the filter.
    pub term_counts: Option<TermCounts>,
    /// Claim readability over the kept records.
    pub claim_readability: Option<ReadabilityReport>,
    pub splits: BTreeMap<Split, usize>,
    pub seed: u64,
}

pub fn load_label_map(config: &PipelineConfig) -> Result<LabelMap> {
    match &config.label_map {
        Some(p) => LabelMap::from_tsv(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => Ok(LabelMap::bundled().clone()),
    }
}

pub fn load_lexicon(config: &PipelineConfig) -> Result<HealthLexicon> {
    let lists = if config.lexicon.is_empty() {
        vec![TermList::bundled_glossary()]
    } else {
        config
            .lexicon
            .iter()
            .map(|p| TermList::from_file(p))
            .collect::<Result<_>>()?
    };
    let supplement = match &config.lexicon_supplement {
        Some(p) => {
            let contents = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            data_lines(&contents).map(str::to_string).collect()
        }
        None => bundled_supplement(),
    };
    build_lexicon(&lists, &supplement)
}

pub fn load_easy_words(config: &PipelineConfig) -> Result<EasyWords> {
    match &config.easy_words {
        Some(p) => EasyWords::parse(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => Ok(EasyWords::bundled().clone()),
    }
}

pub fn curate(config: &PipelineConfig) -> Result<CurateReport> {
    let raw_path = config
        .raw_corpus
        .as_ref()
        .ok_or_else(|| Error::Config("raw_corpus is not set".into()))?;
    let label_map = load_label_map(config)?;
    let lexicon = load_lexicon(config)?;
    let easy = load_easy_words(config)?;

    let lines = read_jsonl_lines(raw_path)?;
    let input_records = lines.len();
    let mut seen = BTreeSet::new();
    let mut drops = Vec::new();
    let mut audits: Vec<FilterAudit> = Vec::new();
    let mut kept: Vec<ClaimRecord> = Vec::new();
    for (line, text) in lines {
        let raw: RawRecord = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: raw_path.clone(),
            line,
            message: e.to_string(),
        })?;
        let id = raw.claim_id.trim().to_string();
        let outcome = if id.is_empty() {
            Err(DropReason::MissingId)
        } else if !seen.insert(id.clone()) {
            Err(DropReason::DuplicateId)
        } else {
            resolve_label(&raw, &label_map).and_then(|label| clean(RawRecord { claim_id: id.clone(), ..raw }, label))
        };
        let outcome = outcome.and_then(|record| {
            let audit = passes_health_filter(&record, &lexicon);
            let passed = audit.passed;
            audits.push(audit);
            if passed {
                Ok(record)
            } else {
                Err(DropReason::NotHealthRelated)
            }
        });
        match outcome {
            Ok(record) => kept.push(record),
            Err(reason) => drops.push(DropRecord {
                claim_id: id,
                line,
                reason,
            }),
        }
    }
    kept.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));

    let ids: Vec<String> = kept.iter().map(|r| r.claim_id.clone()).collect();
    let labels: Vec<VeracityLabel> = kept.iter().map(|r| r.label).collect();
    let assignment = split(&ids, Some(&labels), &config.split, config.seed)?;

    let mut drop_counts: BTreeMap<DropReason, usize> = DropReason::ALL.iter().map(|r| (*r, 0)).collect();
    for d in &drops {
        *drop_counts.entry(d.reason).or_default() += 1;
    }
    let mut label_counts: BTreeMap<VeracityLabel, usize> = VeracityLabel::ALL.iter().map(|l| (*l, 0)).collect();
    for r in &kept {
        *label_counts.entry(r.label).or_default() += 1;
    }
    let term_counts = (!audits.is_empty()).then(|| {
        let article: Vec<f64> = audits.iter().map(|a| a.article_count as f64).collect();
        let claim: Vec<f64> = audits.iter().map(|a| a.claim_count as f64).collect();
        TermCounts {
            article: MeanStd::of(&article),
            claim: MeanStd::of(&claim),
        }
    });
    let claims: Vec<&str> = kept.iter().map(|r| r.claim_text.as_str()).collect();
    let claim_readability = if claims.is_empty() {
        None
    } else {
        corpus_readability(&claims, &easy).ok()
    };
    let report = CurateReport {
        input_records,
        kept: kept.len(),
        drops: drop_counts,
        labels: label_counts,
        lexicon: LexiconInfo {
            terms: lexicon.len(),
            sources: lexicon.source_counts().clone(),
        },
        term_counts,
        claim_readability,
        splits: [Split::Train, Split::Validation, Split::Test]
            .into_iter()
            .map(|s| (s, assignment.count(s)))
            .collect(),
        seed: config.seed,
    };

    write_jsonl(&out(config, CORPUS), &kept)?;
    write_jsonl(&out(config, DROPS), &drops)?;
    write_jsonl(&out(config, FILTER_AUDIT), &audits)?;
    write_jsonl(&out(config, SPLITS), &assignment.entries())?;
    write_json(&out(config, CURATE_REPORT), &report)?;
    Ok(report)
}

pub fn read_corpus(config: &PipelineConfig) -> Result<Vec<ClaimRecord>> {
    let path = out(config, CORPUS);
    let records: Vec<ClaimRecord> = read_jsonl(&path)?;
    for r in &records {
        r.check().map_err(|reason| {
            Error::InvalidInput(format!(
                "{}: record {} violates curation constraint {}",
                path.display(),
                r.claim_id,
                reason.as_str()
            ))
        })?;
    }
    Ok(records)
}

pub fn read_splits(config: &PipelineConfig) -> Result<SplitAssignment> {
    Ok(SplitAssignment::from_entries(read_jsonl::<SplitEntry>(&out(config, SPLITS))?))
}

fn in_eval(split: Option<Split>, eval: EvalSplit) -> bool {
    match eval {
        EvalSplit::All => true,
        EvalSplit::Test => split == Some(Split::Test),
        EvalSplit::Validation => split == Some(Split::Validation),
    }
}

// ---------------------------------------------------------------- rank

/// One line of the rankings artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEvidence {
    #[serde(flatten)]
    pub ranking: EvidenceRanking,
    /// The selected sentence texts, in rank order.
    pub evidence: Vec<String>,
}

pub fn rank(config: &PipelineConfig, backends: &Backends) -> Result<Vec<RankedEvidence>> {
    let corpus = read_corpus(config)?;
    let mut out_records = Vec::with_capacity(corpus.len());
    for r in &corpus {
        let sentences = segment_sentences(&r.article_text);
        let ranking = rank_evidence(&r.claim_id, &r.claim_text, &sentences, backends.embedding.as_ref(), config.k)?;
        let evidence = ranking.selected_texts(&sentences).into_iter().map(str::to_string).collect();
        out_records.push(RankedEvidence { ranking, evidence });
    }
    write_jsonl(&out(config, RANKINGS), &out_records)?;
    Ok(out_records)
}

// ---------------------------------------------------------------- predict

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim_id: String,
    pub gold: VeracityLabel,
    pub label: VeracityLabel,
    /// In `true, false, mixture, unproven` order.
    pub probs: LabelDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub examples: usize,
    pub epochs: usize,
    pub converged: bool,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeracityReport {
    pub backend: String,
    pub eval_split: EvalSplit,
    pub metrics: ClassificationMetrics,
    pub training: Option<TrainingSummary>,
}

pub fn predict(config: &PipelineConfig, backends: &Backends) -> Result<VeracityReport> {
    let corpus = read_corpus(config)?;
    let splits = read_splits(config)?;
    let rankings_path = out(config, RANKINGS);
    let rankings: BTreeMap<String, Vec<String>> = read_jsonl::<RankedEvidence>(&rankings_path)?
        .into_iter()
        .map(|r| (r.ranking.claim_id, r.evidence))
        .collect();
    let evidence_for = |r: &ClaimRecord| -> Result<Vec<String>> {
        rankings.get(&r.claim_id).cloned().ok_or_else(|| {
            Error::InvalidInput(format!("{}: no ranking for claim {}", rankings_path.display(), r.claim_id))
        })
    };

    let trained;
    let (classifier, training): (&dyn ClassifierBackend, Option<TrainingSummary>) = match &backends.classifier {
        Some(c) => (c.as_ref(), None),
        None => {
            let examples = corpus
                .iter()
                .filter(|r| splits.get(&r.claim_id) == Some(Split::Train))
                .map(|r| {
                    Ok(TrainingExample {
                        claim: r.claim_text.clone(),
                        evidence: evidence_for(r)?,
                        label: r.label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (model, trace) = train_baseline(&examples, &config.baseline.train_config())?;
            trained = model;
            let summary = TrainingSummary {
                examples: examples.len(),
                epochs: trace.losses.len() - 1,
                converged: trace.converged,
                initial_loss: trace.losses[0],
                final_loss: *trace.losses.last().expect("initial loss recorded"),
            };
            (&trained, Some(summary))
        }
    };

    let eval: Vec<&ClaimRecord> = corpus
        .iter()
        .filter(|r| in_eval(splits.get(&r.claim_id), config.eval_split))
        .collect();
    if eval.is_empty() {
        return Err(Error::InvalidInput(format!("{:?} split has no records", config.eval_split)));
    }
    let items: Vec<(String, Vec<String>)> = eval
        .iter()
        .map(|r| Ok((r.claim_text.clone(), evidence_for(r)?)))
        .collect::<Result<_>>()?;
    let mut probs = Vec::with_capacity(items.len());
    for chunk in items.chunks(SERVICE_BATCH) {
        probs.extend(classifier.predict_batch(chunk)?);
    }
    if probs.len() != items.len() {
        return Err(BackendError::Protocol(format!("{} predictions for {} items", probs.len(), items.len())).into());
    }
    let predictions: Vec<Prediction> = eval
        .iter()
        .zip(probs)
        .map(|(r, p)| Prediction {
            claim_id: r.claim_id.clone(),
            gold: r.label,
            label: p.argmax(),
            probs: p,
        })
        .collect();
    let preds: Vec<VeracityLabel> = predictions.iter().map(|p| p.label).collect();
    let golds: Vec<VeracityLabel> = predictions.iter().map(|p| p.gold).collect();
    let report = VeracityReport {
        backend: backends.name.clone(),
        eval_split: config.eval_split,
        metrics: evaluate(&preds, &golds, config.macro_average)?,
        training,
    };
    write_jsonl(&out(config, PREDICTIONS), &predictions)?;
    write_json(&out(config, VERACITY_METRICS), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- explain

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub eval_split: EvalSplit,
    /// Mean F1 per generation method against the gold explanations.
    pub methods: BTreeMap<ExplanationMethod, RougeSummary>,
    /// Claims whose article has no sentences.
    pub skipped: Vec<String>,
}

pub fn explain(config: &PipelineConfig, backends: &Backends) -> Result<RougeReport> {
    let corpus = read_corpus(config)?;
    let splits = read_splits(config)?;
    let eval: Vec<&ClaimRecord> = corpus
        .iter()
        .filter(|r| in_eval(splits.get(&r.claim_id), config.eval_split))
        .collect();
    let mut by_method: BTreeMap<ExplanationMethod, Vec<Explanation>> = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut pending = Vec::new();
    for r in eval {
        let article = segment_sentences(&r.article_text);
        if article.is_empty() {
            skipped.push(r.claim_id.clone());
            continue;
        }
        let gold = Explanation::gold(&r.claim_id, &r.explanation_text)?;
        by_method
            .entry(ExplanationMethod::Lead3)
            .or_default()
            .push(lead3(&r.claim_id, &article)?);
        by_method
            .entry(ExplanationMethod::Oracle)
            .or_default()
            .push(oracle_extractive(&article, &gold, config.oracle_sentences)?);
        by_method.entry(ExplanationMethod::Gold).or_default().push(gold);
        pending.push((r, article));
    }
    if pending.is_empty() {
        return Err(Error::InvalidInput("no records with article sentences to explain".into()));
    }
    if let Some(summarizer) = &backends.summarizer {
        for (r, article) in &pending {
            let e = abstractive(&r.claim_id, &r.claim_text, article, summarizer.as_ref())?;
            by_method.entry(ExplanationMethod::Abstractive).or_default().push(e);
        }
    }

    let golds = by_method[&ExplanationMethod::Gold].clone();
    let methods = by_method
        .iter()
        .filter(|(m, _)| **m != ExplanationMethod::Gold)
        .map(|(m, cands)| Ok((*m, score_corpus(cands, &golds)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut all: Vec<Explanation> = by_method.into_values().flatten().collect();
    all.sort_by(|a, b| a.claim_id.cmp(&b.claim_id).then(a.method.cmp(&b.method)));
    let report = RougeReport {
        eval_split: config.eval_split,
        methods,
        skipped,
    };
    write_jsonl(&out(config, EXPLANATIONS), &all)?;
    write_json(&out(config, ROUGE), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- cohere

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// Explanation method -> NLI backend -> percentages.
    pub sources: BTreeMap<ExplanationMethod, BTreeMap<String, CoherenceSummary>>,
    pub agreement: Option<Vec<AgreementStats>>,
}

pub fn cohere(config: &PipelineConfig, backends: &Backends) -> Result<CoherenceReport> {
    let corpus = read_corpus(config)?;
    let by_id: BTreeMap<&str, &ClaimRecord> = corpus.iter().map(|r| (r.claim_id.as_str(), r)).collect();
    let explanations: Vec<Explanation> = read_jsonl(&out(config, EXPLANATIONS))?;
    let mut grouped: BTreeMap<ExplanationMethod, Vec<CoherenceInput<'_>>> = BTreeMap::new();
    for e in &explanations {
        let record = by_id
            .get(e.claim_id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("explanation for unknown claim {}", e.claim_id)))?;
        grouped.entry(e.method).or_default().push(CoherenceInput {
            claim: &record.claim_text,
            label: record.label,
            explanation: e,
        });
    }
    let nli = backends.nli.as_ref();
    let sources = grouped
        .iter()
        .map(|(m, inputs)| {
            let summary = corpus_coherence(inputs, nli)?;
            Ok((*m, BTreeMap::from([(nli.name(), summary)])))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let agreement = match &config.annotations {
        Some(p) => Some(agreement_stats(p)?),
        None => None,
    };
    let report = CoherenceReport { sources, agreement };
    write_json(&out(config, COHERENCE), &report)?;
    Ok(report)
}

pub fn agreement_stats(path: &Path) -> Result<Vec<AgreementStats>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_annotations(file).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })?;
    Ok(group_annotations(&rows)?.iter().map(randolph_kappa).collect())
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub k: usize,
    pub backend: String,
    pub eval_split: EvalSplit,
    pub oracle_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub settings: RunSettings,
    pub curate: CurateReport,
    pub veracity: Option<VeracityReport>,
    pub rouge: Option<RougeReport>,
    pub coherence: Option<CoherenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub generated_at: String,
    pub tool_version: String,
    /// `/v1/health` payload when a service backend is configured.
    pub service_health: Option<serde_json::Value>,
}

fn optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    match read_json(path) {
        Ok(v) => Ok(Some(v)),
        Err(Error::MissingInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn report(config: &PipelineConfig, backends: &Backends, spec: &BackendSpec) -> Result<EvalReport> {
    let doc = EvalReport {
        settings: RunSettings {
            seed: config.seed,
            k: config.k,
            backend: spec.as_string(),
            eval_split: config.eval_split,
            oracle_sentences: config.oracle_sentences,
        },
        curate: read_json(&out(config, CURATE_REPORT))?,
        veracity: optional(&out(config, VERACITY_METRICS))?,
        rouge: optional(&out(config, ROUGE))?,
        coherence: optional(&out(config, COHERENCE))?,
    };
    let service_health = backends.service.as_ref().map(|s| match s.health() {
        Ok(v) => v,
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    });
    write_json(&out(config, REPORT), &doc)?;
    write_json(
        &out(config, REPORT_META),
        ReportMeta {
            generated_at: chrono::Utc::now().to_rfc3339(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            service_health,
        },
    )?;
    Ok(doc)
}
