//! Veracity prediction: classifier backends, the in-process softmax
//! regression baseline, and classification metrics.

use serde::{Deserialize, Serialize};

use crate::corpus::VeracityLabel;
use crate::error::{BackendError, Error, Result};
use crate::evidence::fnv1a;
use crate::text::tokenize;

pub const NUM_LABELS: usize = 4;

/// Token placed between the claim and the evidence before n-gram extraction.
/// It cannot be produced by [`tokenize`].
const BOUNDARY: &str = "<sep>";

/// Probability over [`VeracityLabel::ALL`], in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDistribution(pub [f64; NUM_LABELS]);

impl LabelDistribution {
    pub fn uniform() -> Self {
        LabelDistribution([1.0 / NUM_LABELS as f64; NUM_LABELS])
    }

    /// Validates a backend-provided row: nonnegative, finite, sums to 1 within 1e-6.
    pub fn try_from_slice(values: &[f64]) -> Result<Self, BackendError> {
        let arr: [f64; NUM_LABELS] = values.try_into().map_err(|_| {
            BackendError::Protocol(format!("expected {NUM_LABELS} probabilities, got {}", values.len()))
        })?;
        if arr.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BackendError::Protocol("probabilities must be finite and nonnegative".into()));
        }
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(BackendError::Protocol(format!("probabilities sum to {sum}")));
        }
        Ok(LabelDistribution(arr))
    }

    /// Highest-probability label; ties go to the earlier class.
    pub fn argmax(&self) -> VeracityLabel {
        let mut best = 0;
        for i in 1..NUM_LABELS {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        VeracityLabel::ALL[best]
    }
}

/// Label predictor over a claim and its selected evidence sentences.
pub trait ClassifierBackend: Send + Sync {
    fn predict(&self, claim: &str, evidence: &[String]) -> Result<LabelDistribution, BackendError>;

    fn predict_batch(
        &self,
        items: &[(String, Vec<String>)],
    ) -> Result<Vec<LabelDistribution>, BackendError> {
        items.iter().map(|(c, e)| self.predict(c, e)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Highest n-gram order; orders `1..=max_ngram` are hashed.
    pub max_ngram: usize,
    pub hash_dim: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            max_ngram: 2,
            hash_dim: 1 << 16,
        }
    }
}

/// Sorted, L2-normalized hashed n-gram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Features(Vec<(u32, f64)>);

impl Features {
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    fn squared_norm(&self) -> f64 {
        self.0.iter().map(|(_, v)| v * v).sum()
    }

    /// Builds features directly from `(index, value)` pairs. Used by tests
    /// that need full control over the design matrix.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        Features(entries)
    }
}

impl FeatureConfig {
    pub fn featurize(&self, claim: &str, evidence: &[String]) -> Features {
        let mut tokens = tokenize(claim);
        tokens.push(BOUNDARY.to_string());
        for sentence in evidence {
            tokens.extend(tokenize(sentence));
        }
        let mut counts = std::collections::BTreeMap::<u32, f64>::new();
        for n in 1..=self.max_ngram.max(1) {
            for gram in tokens.windows(n) {
                let key = format!("{n}:{}", gram.join(" "));
                let bucket = (fnv1a(key.as_bytes()) % self.hash_dim as u64) as u32;
                *counts.entry(bucket).or_insert(0.0) += 1.0;
            }
        }
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        Features(counts.into_iter().map(|(i, v)| (i, v / norm)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub features: FeatureConfig,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    /// Stop when the relative loss change between epochs falls below this.
    pub tolerance: f64,
    /// Fixed step size. `None` uses `1 / L`, where `L` bounds the curvature of
    /// the objective, which makes every step non-increasing in loss.
    pub learning_rate: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            features: FeatureConfig::default(),
            l2_lambda: 1e-4,
            max_epochs: 500,
            tolerance: 1e-7,
            learning_rate: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub claim: String,
    pub evidence: Vec<String>,
    pub label: VeracityLabel,
}

/// Multinomial logistic regression over hashed n-gram features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    /// Row-major `NUM_LABELS x hash_dim`.
    weights: Vec<f64>,
    bias: [f64; NUM_LABELS],
    features: FeatureConfig,
    l2_lambda: f64,
}

/// Gradient of the training objective with the same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_LABELS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Objective value before training followed by one value per epoch.
    pub losses: Vec<f64>,
    pub converged: bool,
}

impl BaselineModel {
    /// All-zero parameters; predicts the uniform distribution.
    pub fn zeros(features: FeatureConfig, l2_lambda: f64) -> Self {
        BaselineModel {
            weights: vec![0.0; NUM_LABELS * features.hash_dim],
            bias: [0.0; NUM_LABELS],
            features,
            l2_lambda,
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64; NUM_LABELS] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64; NUM_LABELS] {
        &mut self.bias
    }

    pub fn featurize(&self, claim: &str, evidence: &[String]) -> Features {
        self.features.featurize(claim, evidence)
    }

    fn logits(&self, x: &Features) -> [f64; NUM_LABELS] {
        let dim = self.features.hash_dim;
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * dim..(c + 1) * dim];
            *zc += x.0.iter().map(|&(i, v)| row[i as usize] * v).sum::<f64>();
        }
        z
    }

    pub fn predict_features(&self, x: &Features) -> LabelDistribution {
        LabelDistribution(softmax(self.logits(x)))
    }

    /// Mean cross-entropy plus `l2_lambda / 2 * ||W||^2` (bias unregularized),
    /// and its gradient.
    pub fn loss_and_gradient(&self, data: &[(Features, VeracityLabel)]) -> (f64, Gradient) {
        let dim = self.features.hash_dim;
        let n = data.len().max(1) as f64;
        let mut grad = Gradient {
            weights: self.weights.iter().map(|w| self.l2_lambda * w).collect(),
            bias: [0.0; NUM_LABELS],
        };
        let mut loss = 0.5 * self.l2_lambda * self.weights.iter().map(|w| w * w).sum::<f64>();
        for (x, label) in data {
            let z = self.logits(x);
            let lse = log_sum_exp(&z);
            let y = label.index();
            loss += (lse - z[y]) / n;
            for c in 0..NUM_LABELS {
                let residual = ((z[c] - lse).exp() - if c == y { 1.0 } else { 0.0 }) / n;
                grad.bias[c] += residual;
                let row = &mut grad.weights[c * dim..(c + 1) * dim];
                for &(i, v) in &x.0 {
                    row[i as usize] += residual * v;
                }
            }
        }
        (loss, grad)
    }

    pub fn loss(&self, data: &[(Features, VeracityLabel)]) -> f64 {
        self.loss_and_gradient(data).0
    }
}

impl ClassifierBackend for BaselineModel {
    fn predict(&self, claim: &str, evidence: &[String]) -> Result<LabelDistribution, BackendError> {
        Ok(self.predict_features(&self.featurize(claim, evidence)))
    }
}

fn log_sum_exp(z: &[f64; NUM_LABELS]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn softmax(z: [f64; NUM_LABELS]) -> [f64; NUM_LABELS] {
    let lse = log_sum_exp(&z);
    z.map(|v| (v - lse).exp())
}

/// Full-batch gradient descent from zero parameters.
pub fn train_baseline(
    examples: &[TrainingExample],
    config: &TrainConfig,
) -> Result<(BaselineModel, TrainingTrace)> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let first = examples[0].label;
    if examples.iter().all(|e| e.label == first) {
        return Err(Error::InvalidInput(
            "training set needs at least two distinct labels".into(),
        ));
    }
    if config.features.hash_dim == 0 {
        return Err(Error::Config("hash_dim must be positive".into()));
    }
    let data: Vec<(Features, VeracityLabel)> = examples
        .iter()
        .map(|e| (config.features.featurize(&e.claim, &e.evidence), e.label))
        .collect();
    Ok(fit(&data, config))
}

/// Gradient descent on pre-featurized data.
pub fn fit(data: &[(Features, VeracityLabel)], config: &TrainConfig) -> (BaselineModel, TrainingTrace) {
    let mut model = BaselineModel::zeros(config.features, config.l2_lambda);
    let step = config.learning_rate.unwrap_or_else(|| {
        // softmax cross-entropy curvature is at most ||[x; 1]||^2 / 2 per example
        let max_sq = data
            .iter()
            .map(|(x, _)| x.squared_norm() + 1.0)
            .fold(0.0, f64::max);
        1.0 / (0.5 * max_sq + config.l2_lambda)
    });
    let (mut loss, mut grad) = model.loss_and_gradient(data);
    let mut losses = vec![loss];
    let mut converged = false;
    for _ in 0..config.max_epochs {
        for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
            *w -= step * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
            *b -= step * g;
        }
        let (next_loss, next_grad) = model.loss_and_gradient(data);
        losses.push(next_loss);
        let rel = (loss - next_loss).abs() / loss.abs().max(f64::MIN_POSITIVE);
        loss = next_loss;
        grad = next_grad;
        if rel < config.tolerance {
            converged = true;
            break;
        }
    }
    (model, TrainingTrace { losses, converged })
}

/// Which classes enter the macro average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroAverage {
    /// All four labels, present or not.
    #[default]
    AllLabels,
    /// Only labels that occur in the gold sequence.
    GoldLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: VeracityLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Precision/recall/F1 per class and macro-averaged, plus accuracy.
///
/// A class never predicted has precision 0, a class absent from the gold
/// labels has recall 0, and F1 is 0 when precision + recall is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub averaging: MacroAverage,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][pred]` in label order.
    pub confusion: [[usize; NUM_LABELS]; NUM_LABELS],
}

pub(crate) fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn evaluate(
    preds: &[VeracityLabel],
    golds: &[VeracityLabel],
    averaging: MacroAverage,
) -> Result<ClassificationMetrics> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no predictions to evaluate".into()));
    }
    let mut confusion = [[0usize; NUM_LABELS]; NUM_LABELS];
    for (p, g) in preds.iter().zip(golds) {
        confusion[g.index()][p.index()] += 1;
    }
    let per_class: Vec<ClassMetrics> = VeracityLabel::ALL
        .iter()
        .map(|&label| {
            let c = label.index();
            let tp = confusion[c][c] as f64;
            let predicted: usize = (0..NUM_LABELS).map(|g| confusion[g][c]).sum();
            let support: usize = confusion[c].iter().sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = if support == 0 { 0.0 } else { tp / support as f64 };
            ClassMetrics {
                label,
                precision,
                recall,
                f1: harmonic_mean(precision, recall),
                support,
            }
        })
        .collect();
    let averaged: Vec<&ClassMetrics> = per_class
        .iter()
        .filter(|m| averaging == MacroAverage::AllLabels || m.support > 0)
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        averaged.iter().map(|m| f(m)).sum::<f64>() / averaged.len() as f64
    };
    let correct: usize = (0..NUM_LABELS).map(|c| confusion[c][c]).sum();
    Ok(ClassificationMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: correct as f64 / preds.len() as f64,
        averaging,
        per_class,
        confusion,
    })
}
