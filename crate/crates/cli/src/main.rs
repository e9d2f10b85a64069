use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use factcheck_core::pipeline::{self, resolve_backend, PipelineConfig, Stage, BACKEND_ENV};
use factcheck_core::Error;

const EXIT_STAGE_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

/// Curate health fact-checking corpora and evaluate veracity predictions
/// and explanations.
#[derive(Debug, Parser)]
#[command(name = "factcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration (TOML). Relative paths inside it resolve
    /// against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for the train/validation/test split.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// `stub` or the inference service base URL. Overrides $FACTCHECK_BACKEND
    /// and the configuration file.
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Standardize labels, clean, filter by health lexicon and split.
    Curate,
    /// Rank article sentences against each claim.
    Rank,
    /// Predict veracity labels and compute classification metrics.
    Predict,
    /// Build Lead-3, Oracle and abstractive explanations and score ROUGE.
    Explain,
    /// Check explanation coherence and annotator agreement.
    Cohere,
    /// Merge metric bundles into report.json.
    Report,
    /// Run every stage in order.
    All,
}

impl Command {
    fn stages(self) -> Vec<Stage> {
        match self {
            Command::Curate => vec![Stage::Curate],
            Command::Rank => vec![Stage::Rank],
            Command::Predict => vec![Stage::Predict],
            Command::Explain => vec![Stage::Explain],
            Command::Cohere => vec![Stage::Cohere],
            Command::Report => vec![Stage::Report],
            Command::All => Stage::ALL.to_vec(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    let env = std::env::var(BACKEND_ENV).ok();
    let spec = match resolve_backend(cli.backend.as_deref(), env.as_deref(), &config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    match pipeline::run(&config, &spec, &cli.command.stages()) {
        Ok(()) => {
            println!("wrote artifacts to {}", config.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            if matches!(failure.error, Error::Config(_)) {
                ExitCode::from(EXIT_CONFIG_ERROR)
            } else {
                ExitCode::from(EXIT_STAGE_FAILURE)
            }
        }
    }
}
