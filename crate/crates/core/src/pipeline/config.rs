use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::DEFAULT_TOP_K;
use crate::explain::DEFAULT_ORACLE_SENTENCES;
use crate::veracity::{FeatureConfig, MacroAverage, TrainConfig};

/// Environment variable that overrides the configured backend.
pub const BACKEND_ENV: &str = "FACTCHECK_BACKEND";

/// Where model-backed steps run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    /// In-process implementations: hashed TF-IDF encoder, trained softmax
    /// baseline, token-overlap NLI, no abstractive summarizer.
    Stub,
    /// Inference service base URL.
    Service(String),
}

impl BackendSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("stub") {
            Ok(BackendSpec::Stub)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(BackendSpec::Service(s.to_string()))
        } else {
            Err(Error::Config(format!(
                "backend must be `stub` or an http(s) URL, got `{s}`"
            )))
        }
    }

    pub fn as_string(&self) -> String {
        match self {
            BackendSpec::Stub => "stub".into(),
            BackendSpec::Service(url) => url.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    /// Split each label separately.
    #[serde(default)]
    pub stratify: bool,
}

impl Default for SplitConfig {
    /// 9,466 / 1,183 / 1,183 of 11,832 records.
    fn default() -> Self {
        SplitConfig {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            stratify: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    #[default]
    Test,
    Validation,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub max_ngram: usize,
    pub hash_dim: usize,
    pub l2_lambda: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        BaselineConfig {
            max_ngram: t.features.max_ngram,
            hash_dim: t.features.hash_dim,
            l2_lambda: t.l2_lambda,
            max_epochs: t.max_epochs,
            tolerance: t.tolerance,
        }
    }
}

impl BaselineConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            features: FeatureConfig {
                max_ngram: self.max_ngram,
                hash_dim: self.hash_dim,
            },
            l2_lambda: self.l2_lambda,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            learning_rate: None,
        }
    }
}

/// Pipeline configuration, usually read from TOML. Relative paths resolve
/// against the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Raw JSON-lines input for the curate stage.
    pub raw_corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Label map TSV; the bundled mapping when unset.
    pub label_map: Option<PathBuf>,
    /// Lexicon term lists; the bundled glossary when empty.
    pub lexicon: Vec<PathBuf>,
    /// Supplementary terms; the bundled 65-term list when unset.
    pub lexicon_supplement: Option<PathBuf>,
    /// Dale-Chall easy words; the bundled list when unset.
    pub easy_words: Option<PathBuf>,
    /// Questionnaire responses CSV for agreement statistics.
    pub annotations: Option<PathBuf>,
    pub k: usize,
    pub seed: u64,
    pub split: SplitConfig,
    pub eval_split: EvalSplit,
    pub backend: String,
    pub baseline: BaselineConfig,
    pub macro_average: MacroAverage,
    pub oracle_sentences: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            raw_corpus: None,
            out_dir: PathBuf::from("out"),
            label_map: None,
            lexicon: Vec::new(),
            lexicon_supplement: None,
            easy_words: None,
            annotations: None,
            k: DEFAULT_TOP_K,
            seed: 2020,
            split: SplitConfig::default(),
            eval_split: EvalSplit::default(),
            backend: "stub".into(),
            baseline: BaselineConfig::default(),
            macro_average: MacroAverage::default(),
            oracle_sentences: DEFAULT_ORACLE_SENTENCES,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(contents: &str) -> Result<Self> {
        toml::from_str(contents).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&contents)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.raw_corpus,
            &mut self.label_map,
            &mut self.lexicon_supplement,
            &mut self.easy_words,
            &mut self.annotations,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.lexicon.iter_mut().for_each(fix);
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let s = self.split;
        if [s.train, s.validation, s.test].iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        if (s.train + s.validation + s.test - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions sum to {}, expected 1",
                s.train + s.validation + s.test
            )));
        }
        if self.oracle_sentences == 0 {
            return Err(Error::Config("oracle_sentences must be at least 1".into()));
        }
        if self.baseline.hash_dim == 0 || self.baseline.max_ngram == 0 {
            return Err(Error::Config("baseline hash_dim and max_ngram must be positive".into()));
        }
        self.backend_spec().map(|_| ())
    }

    pub fn backend_spec(&self) -> Result<BackendSpec> {
        BackendSpec::parse(&self.backend)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.backend_spec().unwrap(), BackendSpec::Stub);
    }

    #[test]
    fn parses_toml_with_partial_tables() {
        let c = PipelineConfig::from_toml(
            "raw_corpus = \"raw.jsonl\"\nk = 3\nbackend = \"http://localhost:8080\"\n\
             [split]\ntrain = 0.6\nvalidation = 0.2\ntest = 0.2\n[baseline]\nmax_epochs = 50\n",
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.k, 3);
        assert_eq!(c.baseline.max_epochs, 50);
        assert_eq!(c.baseline.hash_dim, BaselineConfig::default().hash_dim);
        assert_eq!(c.backend_spec().unwrap(), BackendSpec::Service("http://localhost:8080".into()));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(PipelineConfig::from_toml("unknown_key = 1").is_err());
        let c = PipelineConfig { k: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.split.test = 0.2;
        assert!(c.validate().is_err());
        let c = PipelineConfig { backend: "ftp://x".into(), ..Default::default() };
        assert!(c.validate().is_err());
    }
}
