use super::demos::{Demonstration, PoolError};
use super::{DemonstrationPool, Task};
use crate::adapters::{join_cells, render_rows, render_table, PromptError};
use crate::model::{QaExample, Table};

const SEPARATOR: &str = "---";
const HEADER_ROWS: usize = 2;

/// The context a prompt is built around.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptTarget<'a> {
    pub table: Option<&'a Table>,
    pub question: Option<&'a str>,
    pub candidate_table: Option<&'a Table>,
}

impl<'a> PromptTarget<'a> {
    pub fn example(ex: &'a QaExample) -> Self {
        PromptTarget {
            table: Some(&ex.table),
            question: Some(&ex.question),
            candidate_table: None,
        }
    }

    pub fn with_candidate(mut self, table: &'a Table) -> Self {
        self.candidate_table = Some(table);
        self
    }

    fn of_demo(d: &'a Demonstration) -> Self {
        PromptTarget {
            table: d.table.as_ref(),
            question: d.question.as_deref(),
            candidate_table: d.candidate_table.as_ref(),
        }
    }
}

pub fn instruction(task: Task) -> String {
    match task {
        Task::HeaderSynonym => "Rename some columns of the table with synonyms that keep their meaning. \
Only the header and the first two rows are shown. Explain the change on a line starting with \
\"Explanation:\", then write the full new header on a line starting with \"New header:\", \
names separated by \" | \"."
            .to_string(),
        Task::HeaderAbbrev => "Rename some columns of the table with common abbreviations of their \
names. Only the header and the first two rows are shown. Explain the change on a line starting \
with \"Explanation:\", then write the full new header on a line starting with \"New header:\", \
names separated by \" | \"."
            .to_string(),
        Task::ColExtension => "Find a column whose cells combine two values and split it into two \
columns. Write \"Extended column:\" followed by the name of that column, then a line with the two \
new column names, then one line per table row with the two new cells, separated by \" | \"."
            .to_string(),
        Task::ColMasking => "Find a column whose content can be inferred from the other columns, \
so that removing it loses no information needed by the question. Write its name on a line \
starting with \"Masked column:\"."
            .to_string(),
        Task::ColAdding => "Select one or two columns from the candidate table that can be \
inserted into the table. Write their names on a line starting with \"Added column:\", separated \
by \" | \"."
            .to_string(),
        Task::Paraphrase(c) => format!(
            "Paraphrase the question. Category {}: {}. Keep the meaning and every entity, number, \
and quoted value. Explain the change on a line starting with \"Explanation:\", then write the new \
question on a line starting with \"Paraphrase:\".",
            c.name(),
            c.description()
        ),
    }
}

fn missing(task: Task, what: &str) -> PromptError {
    PromptError::MissingContext(format!("{task} prompt needs a {what}"))
}

fn render_context(task: Task, t: &PromptTarget<'_>) -> Result<String, PromptError> {
    let mut s = String::new();
    match task {
        Task::Paraphrase(_) => {
            let q = t.question.ok_or_else(|| missing(task, "question"))?;
            if let Some(table) = t.table.filter(|t| !t.header.is_empty()) {
                s.push_str("Header: ");
                s.push_str(&join_cells(&table.header));
                s.push('\n');
            }
            s.push_str("Original: ");
            s.push_str(q.trim());
        }
        Task::HeaderSynonym | Task::HeaderAbbrev => {
            let table = t.table.ok_or_else(|| missing(task, "table"))?;
            s.push_str("Table:\n");
            s.push_str(&render_rows(table, HEADER_ROWS));
        }
        Task::ColExtension | Task::ColMasking => {
            let table = t.table.ok_or_else(|| missing(task, "table"))?;
            s.push_str("Table:\n");
            s.push_str(&render_table(table));
            if let Some(q) = t.question.filter(|q| !q.trim().is_empty()) {
                s.push_str("\nQuestion: ");
                s.push_str(q.trim());
            }
        }
        Task::ColAdding => {
            let table = t.table.ok_or_else(|| missing(task, "table"))?;
            let cand = t.candidate_table.ok_or_else(|| missing(task, "candidate table"))?;
            s.push_str("Table:\n");
            s.push_str(&render_table(table));
            s.push_str("\nCandidate table:\n");
            s.push_str(&render_table(cand));
        }
    }
    Ok(s)
}

/// The completion a demonstration stands for: optional explanation line,
/// then the delimiter and the output.
pub fn render_completion(task: Task, explanation: Option<&str>, output: &str) -> String {
    let mut s = String::new();
    if let Some(e) = explanation.filter(|e| !e.trim().is_empty()) {
        s.push_str("Explanation: ");
        s.push_str(e.trim());
        s.push('\n');
    }
    s.push_str(task.delimiter());
    s.push(' ');
    s.push_str(output.trim());
    s
}

/// Renders the instruction, the selected demonstrations, and the target
/// context, blocks separated by `---` lines. The text is a pure function
/// of its inputs.
pub fn build_prompt(
    task: Task,
    pool: &DemonstrationPool,
    target: &PromptTarget<'_>,
    seed: u64,
) -> Result<String, PromptError> {
    let demos = pool.select(task, seed).map_err(|e| match e {
        PoolError::TooSmall { need, have, .. } => PromptError::PoolTooSmall {
            what: task.to_string(),
            need,
            have,
        },
        other => PromptError::MissingContext(other.to_string()),
    })?;
    let target_block = render_context(task, target)?;
    let mut out = instruction(task);
    out.push('\n');
    for d in demos {
        out.push('\n');
        out.push_str(SEPARATOR);
        out.push('\n');
        out.push_str(&render_context(task, &PromptTarget::of_demo(d))?);
        out.push('\n');
        out.push_str(&render_completion(task, d.explanation.as_deref(), &d.output));
        out.push('\n');
    }
    out.push('\n');
    out.push_str(SEPARATOR);
    out.push('\n');
    out.push_str(&target_block);
    out.push('\n');
    Ok(out)
}
