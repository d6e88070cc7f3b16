use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AdapterError, ModelAdapter};
use crate::llm::{CompletionRequest, LlmClient};
use crate::model::Table;

pub const DEFAULT_SHOTS: usize = 2;

const QA_INSTRUCTION: &str = "Answer the question about the table. Reason step by step, then \
write the final answer on a line starting with \"Answer:\". Separate multiple answers with \" | \".";

/// A worked example: table, question, reasoning chain, and final answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaDemo {
    pub table: Table,
    pub question: String,
    pub reasoning: String,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("expected {expected} demonstrations, got {got}")]
    DemoCount { expected: usize, got: usize },
    #[error("{what} needs at least {need} demonstrations, pool has {have}")]
    PoolTooSmall { what: String, need: usize, have: usize },
    #[error("{0}")]
    MissingContext(String),
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}

/// Header line, then one line per row, cells separated by " | ".
pub fn render_table(table: &Table) -> String {
    render_rows(table, table.rows.len())
}

pub(crate) fn render_rows(table: &Table, limit: usize) -> String {
    let mut s = join_cells(&table.header);
    for row in table.rows.iter().take(limit) {
        s.push('\n');
        s.push_str(&join_cells(row));
    }
    s
}

pub(crate) fn join_cells(cells: &[String]) -> String {
    cells.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | ")
}

fn render_demo(out: &mut String, d: &QaDemo) {
    out.push_str("Table:\n");
    out.push_str(&render_table(&d.table));
    out.push_str("\nQuestion: ");
    out.push_str(&d.question);
    out.push('\n');
    out.push_str(d.reasoning.trim());
    out.push_str("\nAnswer: ");
    out.push_str(&join_cells(&d.answers));
    out.push_str("\n\n");
}

/// Few-shot reasoning prompt. `shots` demonstrations are required.
pub fn build_qa_cot_prompt(
    demos: &[QaDemo],
    table: &Table,
    question: &str,
    shots: usize,
) -> Result<String, PromptError> {
    if demos.len() != shots || shots == 0 {
        return Err(PromptError::DemoCount {
            expected: shots,
            got: demos.len(),
        });
    }
    let mut s = String::from(QA_INSTRUCTION);
    s.push_str("\n\n");
    for d in demos {
        render_demo(&mut s, d);
    }
    s.push_str("Table:\n");
    s.push_str(&render_table(table));
    s.push_str("\nQuestion: ");
    s.push_str(question);
    s.push('\n');
    Ok(s)
}

/// Text after the last "Answer:", up to the end of that line, split on "|".
pub fn parse_final_answer(text: &str) -> Result<Vec<String>, AdapterError> {
    let Some(at) = text.rfind("Answer:") else {
        return Err(AdapterError::Unparseable("no \"Answer:\" marker".into()));
    };
    let rest = &text[at + "Answer:".len()..];
    let line = rest.lines().next().unwrap_or("");
    Ok(line
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

/// Few-shot reasoning QA through an LLM client (temperature 0.7, no
/// frequency penalty).
pub struct LlmQaAdapter {
    name: String,
    client: Arc<dyn LlmClient>,
    model: String,
    demos: Vec<QaDemo>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl LlmQaAdapter {
    pub fn new(client: Arc<dyn LlmClient>, model: &str, demos: Vec<QaDemo>) -> Result<Self, PromptError> {
        if demos.len() != DEFAULT_SHOTS {
            return Err(PromptError::DemoCount {
                expected: DEFAULT_SHOTS,
                got: demos.len(),
            });
        }
        Ok(LlmQaAdapter {
            name: format!("llm:{model}"),
            client,
            model: model.to_string(),
            demos,
            temperature: 0.7,
            max_tokens: 256,
        })
    }

    pub fn prompt(&self, table: &Table, question: &str) -> String {
        build_qa_cot_prompt(&self.demos, table, question, self.demos.len())
            .expect("demo count checked at construction")
    }
}

impl ModelAdapter for LlmQaAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn answer(&self, table: &Table, question: &str) -> Result<Vec<String>, AdapterError> {
        let mut req = CompletionRequest::new(&self.model, self.prompt(table, question));
        req.temperature = self.temperature;
        req.max_tokens = self.max_tokens;
        req.frequency_penalty = 0.0;
        let text = self.client.complete(&req)?;
        parse_final_answer(&text)
    }
}
