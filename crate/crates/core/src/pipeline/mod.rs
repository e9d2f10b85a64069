//! Stage orchestration: configuration, seeded splits, JSON-lines artifacts
//! and the merged evaluation report.
//!
//! Stages run in the fixed order curate, rank, predict, explain, cohere,
//! report. Each reads its predecessors' artifacts from the output directory
//! and writes its own. A failing stage writes `error.json` with
//! `{stage, kind, message}` and stops the run.

pub mod artifacts;
pub mod config;
pub mod split;
pub mod stages;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{BackendSpec, PipelineConfig, BACKEND_ENV};
pub use split::{split, Split, SplitAssignment};

use crate::coherence::{NliBackend, TokenOverlapNli};
use crate::error::{Error, Result};
use crate::evidence::{EmbeddingBackend, HashedTfIdf};
use crate::explain::SummarizerBackend;
use crate::service::ServiceClient;
use crate::veracity::ClassifierBackend;

pub const ERROR_RECORD: &str = "error.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Curate,
    Rank,
    Predict,
    Explain,
    Cohere,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Curate,
        Stage::Rank,
        Stage::Predict,
        Stage::Explain,
        Stage::Cohere,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Curate => "curate",
            Stage::Rank => "rank",
            Stage::Predict => "predict",
            Stage::Explain => "explain",
            Stage::Cohere => "cohere",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Model backends used by the stages.
pub struct Backends {
    pub name: String,
    pub embedding: Box<dyn EmbeddingBackend>,
    pub nli: Box<dyn NliBackend>,
    /// `None` trains the in-process baseline on the train split.
    pub classifier: Option<Box<dyn ClassifierBackend>>,
    /// `None` skips abstractive explanations.
    pub summarizer: Option<Box<dyn SummarizerBackend>>,
    pub service: Option<ServiceClient>,
}

impl Backends {
    pub fn stub() -> Self {
        Backends {
            name: "stub".into(),
            embedding: Box::new(HashedTfIdf::default()),
            nli: Box::new(TokenOverlapNli),
            classifier: None,
            summarizer: None,
            service: None,
        }
    }

    pub fn service(url: &str) -> Self {
        let client = ServiceClient::new(url);
        Backends {
            name: format!("service:{}", client.base_url()),
            embedding: Box::new(client.clone()),
            nli: Box::new(client.clone()),
            classifier: Some(Box::new(client.clone())),
            summarizer: Some(Box::new(client.clone())),
            service: Some(client),
        }
    }

    pub fn from_spec(spec: &BackendSpec) -> Self {
        match spec {
            BackendSpec::Stub => Self::stub(),
            BackendSpec::Service(url) => Self::service(url),
        }
    }
}

/// Backend precedence: explicit flag, then the environment, then the config.
pub fn resolve_backend(flag: Option<&str>, env: Option<&str>, config: &PipelineConfig) -> Result<BackendSpec> {
    match flag.or(env).filter(|s| !s.trim().is_empty()) {
        Some(s) => BackendSpec::parse(s),
        None => config.backend_spec(),
    }
}

/// Machine-readable record of a failed stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: Stage,
    pub kind: String,
    pub message: String,
}

#[derive(Debug)]
pub struct StageFailure {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs `stages` (in canonical order, duplicates ignored) with backends
/// chosen by `spec`.
pub fn run(config: &PipelineConfig, spec: &BackendSpec, stages: &[Stage]) -> std::result::Result<(), StageFailure> {
    run_with(config, spec, &Backends::from_spec(spec), stages)
}

pub fn run_with(
    config: &PipelineConfig,
    spec: &BackendSpec,
    backends: &Backends,
    stages: &[Stage],
) -> std::result::Result<(), StageFailure> {
    let first = stages.iter().min().copied().unwrap_or(Stage::Curate);
    let fail = |stage: Stage, error: Error| {
        let record = ErrorRecord {
            stage,
            kind: error.kind().to_string(),
            message: error.to_string(),
        };
        // the stage error is what the caller needs; a failed write adds nothing
        let _ = artifacts::write_pretty(&config.out_dir.join(ERROR_RECORD), &record);
        StageFailure { stage, error }
    };
    config.validate().map_err(|e| fail(first, e))?;
    let stale = config.out_dir.join(ERROR_RECORD);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| fail(first, Error::io(&stale, e)))?;
    }
    for stage in Stage::ALL.into_iter().filter(|s| stages.contains(s)) {
        let result = match stage {
            Stage::Curate => stages::curate(config).map(drop),
            Stage::Rank => stages::rank(config, backends).map(drop),
            Stage::Predict => stages::predict(config, backends).map(drop),
            Stage::Explain => stages::explain(config, backends).map(drop),
            Stage::Cohere => stages::cohere(config, backends).map(drop),
            Stage::Report => stages::report(config, backends, spec).map(drop),
        };
        result.map_err(|e| fail(stage, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!("all".parse::<Stage>().is_err());
    }

    #[test]
    fn backend_precedence() {
        let config = PipelineConfig {
            backend: "http://config:1".into(),
            ..Default::default()
        };
        let url = |s: &str| BackendSpec::Service(s.into());
        assert_eq!(resolve_backend(None, None, &config).unwrap(), url("http://config:1"));
        assert_eq!(resolve_backend(None, Some("http://env:2"), &config).unwrap(), url("http://env:2"));
        assert_eq!(resolve_backend(Some("stub"), Some("http://env:2"), &config).unwrap(), BackendSpec::Stub);
        assert_eq!(resolve_backend(None, Some(""), &config).unwrap(), url("http://config:1"));
        assert!(resolve_backend(Some("nonsense"), None, &config).is_err());
    }
}
