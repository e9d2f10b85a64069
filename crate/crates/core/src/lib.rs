//! Curation, evidence ranking, veracity prediction and explanation quality
//! evaluation for health-domain fact-checking corpora.
//!
//! Model-heavy steps (sentence encoders, NLI, fine-tuned classifiers and
//! abstractive summarizers) sit behind small backend traits. Each has an
//! in-process implementation so the whole pipeline runs without a model
//! server, and [`service::ServiceClient`] implements all of them over HTTP.

pub mod coherence;
pub mod corpus;
pub mod data;
pub mod error;
pub mod evidence;
pub mod explain;
pub mod lexicon;
pub mod pipeline;
pub mod readability;
pub mod service;
pub mod text;
pub mod veracity;

pub use error::{BackendError, Error, Result};
