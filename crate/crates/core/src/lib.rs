//! Adversarial perturbation, LLM-assisted generation, and robustness
//! evaluation for table question answering.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] and [`jsonl`]: tables, examples, paired records, and their
//!   line-delimited JSON form.
//! - [`perturb`]: the operator registry, structural shuffles, and mix
//!   composition.
//! - [`rules`]: dictionary and rule based generators for headers, columns,
//!   and questions.
//! - [`retrieval`]: a tf-idf table retriever used for column adding.
//! - [`augment`]: prompt construction, parsing, and validation for
//!   LLM-generated perturbations.
//! - [`adapters`]: model answers from files, HTTP endpoints, LLMs, or mocks.
//! - [`metrics`]: exact match, robustness accuracy, and reports.
//! - [`annotation`]: the model-in-the-loop question annotation workflow.

pub mod adapters;
pub mod annotation;
pub mod augment;
pub mod exec;
pub mod jsonl;
pub mod limit;
pub mod llm;
pub mod metrics;
pub mod model;
pub mod perturb;
pub mod resources;
pub mod retrieval;
pub mod rng;
pub mod rules;
pub mod text;

pub use exec::Execution;
pub use model::{
    Dataset, DatasetKind, Level, PerturbationSpec, PerturbationType, PerturbedPair, Provenance,
    QaExample, Table,
};
