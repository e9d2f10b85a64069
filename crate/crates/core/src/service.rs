//! HTTP client for the model inference service.
//!
//! Endpoints (JSON over HTTP/1.1):
//!
//! | path            | request                                   | response                              |
//! |-----------------|-------------------------------------------|---------------------------------------|
//! | `/v1/embed`     | `{texts: [str]}`                          | `{vectors: [[num]], dim}`             |
//! | `/v1/nli`       | `{pairs: [{premise, hypothesis}]}`        | `{relations: [str], probs: [[num;3]]}`|
//! | `/v1/classify`  | `{items: [{claim, evidence: [str]}]}`     | `{probs: [[num;4]], labels: [str]}`   |
//! | `/v1/summarize` | `{items: [{claim, sentences: [str]}]}`    | `{summaries: [[str]]}`                |
//! | `/v1/health`    | GET                                       | model identifiers and versions        |
//!
//! Response arrays are positional and must match the request length.
//! Classification probabilities follow [`VeracityLabel::ALL`] order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::coherence::{NliBackend, NliRelation};
use crate::corpus::VeracityLabel;
use crate::error::BackendError;
use crate::evidence::{EmbeddingBackend, SparseVector};
use crate::explain::SummarizerBackend;
use crate::veracity::{ClassifierBackend, LabelDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliPair {
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliRequest {
    pub pairs: Vec<NliPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliResponse {
    pub relations: Vec<String>,
    #[serde(default)]
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyItem {
    pub claim: String,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub items: Vec<ClassifyItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub probs: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeItem {
    pub claim: String,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub items: Vec<SummarizeItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeResponse {
    pub summaries: Vec<Vec<String>>,
}

/// Blocking client; one instance may be shared across threads.
#[derive(Debug, Clone)]
pub struct ServiceClient {
    base_url: String,
    agent: ureq::Agent,
}

impl ServiceClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Self {
        ServiceClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, BackendError> {
        let url = format!("{}{path}", self.base_url);
        let resp = self.agent.post(&url).send_json(body).map_err(map_ureq)?;
        resp.into_json::<Resp>()
            .map_err(|e| BackendError::Protocol(format!("{path}: {e}")))
    }

    /// `GET /v1/health`.
    pub fn health(&self) -> Result<serde_json::Value, BackendError> {
        let url = format!("{}/v1/health", self.base_url);
        let resp = self.agent.get(&url).call().map_err(map_ureq)?;
        resp.into_json()
            .map_err(|e| BackendError::Protocol(format!("/v1/health: {e}")))
    }

    pub fn classify(&self, items: &[(String, Vec<String>)]) -> Result<Vec<LabelDistribution>, BackendError> {
        let req = ClassifyRequest {
            items: items
                .iter()
                .map(|(claim, evidence)| ClassifyItem {
                    claim: claim.clone(),
                    evidence: evidence.clone(),
                })
                .collect(),
        };
        let resp: ClassifyResponse = self.post("/v1/classify", &req)?;
        expect_len("/v1/classify probs", items.len(), resp.probs.len())?;
        expect_len("/v1/classify labels", items.len(), resp.labels.len())?;
        resp.probs
            .iter()
            .zip(&resp.labels)
            .map(|(row, label)| {
                let dist = LabelDistribution::try_from_slice(row)?;
                label
                    .parse::<VeracityLabel>()
                    .map_err(|_| BackendError::Protocol(format!("unknown label `{label}`")))?;
                Ok(dist)
            })
            .collect()
    }

    pub fn summarize(&self, items: &[(String, Vec<String>)]) -> Result<Vec<Vec<String>>, BackendError> {
        let req = SummarizeRequest {
            items: items
                .iter()
                .map(|(claim, sentences)| SummarizeItem {
                    claim: claim.clone(),
                    sentences: sentences.clone(),
                })
                .collect(),
        };
        let resp: SummarizeResponse = self.post("/v1/summarize", &req)?;
        expect_len("/v1/summarize", items.len(), resp.summaries.len())?;
        Ok(resp.summaries)
    }
}

fn map_ureq(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Status(status, resp) => BackendError::Status {
            status,
            body: resp.into_string().unwrap_or_default(),
        },
        ureq::Error::Transport(t) => BackendError::Transport(t.to_string()),
    }
}

fn expect_len(what: &str, expected: usize, got: usize) -> Result<(), BackendError> {
    if expected != got {
        return Err(BackendError::Protocol(format!(
            "{what}: expected {expected} entries, got {got}"
        )));
    }
    Ok(())
}

impl EmbeddingBackend for ServiceClient {
    fn embed(&self, texts: &[String]) -> Result<Vec<SparseVector>, BackendError> {
        let resp: EmbedResponse = self.post(
            "/v1/embed",
            &EmbedRequest {
                texts: texts.to_vec(),
            },
        )?;
        expect_len("/v1/embed", texts.len(), resp.vectors.len())?;
        if resp.dim == 0 || resp.vectors.iter().any(|v| v.len() != resp.dim) {
            return Err(BackendError::Protocol(format!(
                "/v1/embed: vectors do not all have dimension {}",
                resp.dim
            )));
        }
        Ok(resp.vectors.iter().map(|v| SparseVector::from_dense(v)).collect())
    }
}

impl NliBackend for ServiceClient {
    fn relate(&self, pairs: &[(String, String)]) -> Result<Vec<NliRelation>, BackendError> {
        let req = NliRequest {
            pairs: pairs
                .iter()
                .map(|(p, h)| NliPair {
                    premise: p.clone(),
                    hypothesis: h.clone(),
                })
                .collect(),
        };
        let resp: NliResponse = self.post("/v1/nli", &req)?;
        expect_len("/v1/nli", pairs.len(), resp.relations.len())?;
        resp.relations
            .iter()
            .map(|r| {
                NliRelation::parse(r)
                    .ok_or_else(|| BackendError::Protocol(format!("unknown NLI relation `{r}`")))
            })
            .collect()
    }

    fn name(&self) -> String {
        format!("service:{}", self.base_url)
    }
}

impl ClassifierBackend for ServiceClient {
    fn predict(&self, claim: &str, evidence: &[String]) -> Result<LabelDistribution, BackendError> {
        let mut out = self.classify(&[(claim.to_string(), evidence.to_vec())])?;
        Ok(out.remove(0))
    }

    fn predict_batch(&self, items: &[(String, Vec<String>)]) -> Result<Vec<LabelDistribution>, BackendError> {
        self.classify(items)
    }
}

impl SummarizerBackend for ServiceClient {
    fn summarize(&self, claim: &str, sentences: &[String]) -> Result<Vec<String>, BackendError> {
        let mut out = ServiceClient::summarize(self, &[(claim.to_string(), sentences.to_vec())])?;
        Ok(out.remove(0))
    }
}
