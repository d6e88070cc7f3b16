//! Uniform access to model answers.
//!
//! Models are never loaded in-process: answers come from prediction files,
//! HTTP endpoints, an LLM prompted with a few-shot reasoning prompt, or mock
//! adapters used as test oracles.

mod http;
mod llm_qa;
mod predictions;

pub use http::{http_predict, HttpAdapter, PredictRequest, PredictResponse};
pub use llm_qa::{
    build_qa_cot_prompt, parse_final_answer, render_table, LlmQaAdapter, PromptError, QaDemo,
    DEFAULT_SHOTS,
};
pub(crate) use llm_qa::{join_cells, render_rows};
pub use predictions::{
    load_predictions, predict_examples, predict_pairs, read_predictions, PredictError,
    PredictionError, PredictionRecord, PredictionSet, Side,
};

use std::collections::HashMap;
use std::sync::Arc;

use crate::llm::LlmError;
use crate::model::{PerturbedPair, QaExample, Table};
use crate::text::alnum_tokens;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("unparseable completion: {0}")]
    Unparseable(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no stored answer for question `{0}`")]
    UnknownQuestion(String),
    #[error("{0}")]
    Other(String),
}

/// A Table QA model. Implementations must be safe to call concurrently and
/// must not depend on call order.
pub trait ModelAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError>;
}

impl<T: ModelAdapter + ?Sized> ModelAdapter for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        (**self).answer(table, question)
    }
}

/// Returns the stored gold answers of whatever example it is asked about.
#[derive(Debug, Default, Clone)]
pub struct GoldAdapter {
    answers: HashMap<(Table, String), Vec<String>>,
}

impl GoldAdapter {
    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a QaExample>) -> Self {
        let mut g = GoldAdapter::default();
        for ex in examples {
            g.add(ex);
        }
        g
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a PerturbedPair>) -> Self {
        let mut g = GoldAdapter::default();
        for p in pairs {
            g.add(&p.pre);
            g.add(&p.post);
        }
        g
    }

    pub fn add(&mut self, ex: &QaExample) {
        self.answers
            .entry((ex.table.clone(), ex.question.clone()))
            .or_insert_with(|| ex.answers.clone());
    }
}

impl ModelAdapter for GoldAdapter {
    fn name(&self) -> &str {
        "gold"
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        self.answers
            .get(&(table.clone(), question.to_string()))
            .cloned()
            .ok_or_else(|| AdapterError::UnknownQuestion(question.to_string()))
    }
}

/// Answers with the first data row's cell in the column whose header shares
/// the most tokens with the question (leftmost on ties).
#[derive(Debug, Default, Clone, Copy)]
pub struct FirstRowAdapter;

impl FirstRowAdapter {
    pub fn pick_column(table: &Table, question: &str) -> usize {
        let q = alnum_tokens(question);
        let mut best = (0usize, 0usize);
        for (j, h) in table.header.iter().enumerate() {
            let mut ht = alnum_tokens(h);
            ht.sort();
            ht.dedup();
            let overlap = ht.iter().filter(|t| q.contains(t)).count();
            if overlap > best.1 {
                best = (j, overlap);
            }
        }
        best.0
    }
}

impl ModelAdapter for FirstRowAdapter {
    fn name(&self) -> &str {
        "first_row"
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        let Some(first) = table.rows.first() else {
            return Ok(Vec::new());
        };
        Ok(vec![first[FirstRowAdapter::pick_column(table, question)].clone()])
    }
}

type AnswerFn = dyn Fn(&Table, &str) -> Result<Vec<String>, AdapterError> + Send + Sync;

/// An adapter backed by a closure; handy for keyed mocks.
pub struct FnAdapter {
    name: String,
    f: Box<AnswerFn>,
}

impl FnAdapter {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Table, &str) -> Result<Vec<String>, AdapterError> + Send + Sync + 'static,
    {
        FnAdapter {
            name: name.into(),
            f: Box::new(f),
        }
    }
}

impl ModelAdapter for FnAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        (self.f)(table, question)
    }
}
