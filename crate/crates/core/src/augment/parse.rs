use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::validate::Rejection;
use super::Task;
use crate::model::{QaExample, Table};
use crate::rng::SeededRng;

/// The typed payload extracted from one completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Candidate {
    /// Full new header; `renames` maps each changed old name to its new one.
    Header {
        names: Vec<String>,
        renames: BTreeMap<String, String>,
    },
    Extension {
        column: String,
        names: Vec<String>,
        cells: Vec<Vec<String>>,
    },
    Mask {
        column: String,
    },
    Add {
        columns: Vec<String>,
    },
    Paraphrase {
        question: String,
    },
}

impl Candidate {
    /// Whitespace- and case-insensitive form used to deduplicate rounds.
    pub fn normalized_key(&self) -> String {
        let flat = serde_json::to_string(self).expect("candidate serializes");
        flat.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ParseError {
    #[error("empty payload")]
    EmptyPayload,
    #[error("missing delimiter `{delimiter}`")]
    MissingDelimiter { delimiter: String },
    #[error("wrong arity: expected {expected}, got {got}")]
    WrongArity { expected: usize, got: usize },
}

/// Splits on `|` not preceded by a backslash, unescapes `\|`, and trims.
pub(crate) fn split_cells(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out.into_iter().map(|c| c.trim().to_string()).collect()
}

/// Lines following the last line that starts with the task's delimiter;
/// the first element is the rest of the delimiter line.
fn after_delimiter<'a>(task: Task, raw: &'a str) -> Option<Vec<&'a str>> {
    let lines: Vec<&str> = raw.lines().collect();
    let delim = task.delimiter();
    let at = lines
        .iter()
        .rposition(|l| l.trim_start().starts_with(delim))?;
    let mut out = vec![lines[at].trim_start()[delim.len()..].trim()];
    out.extend(lines[at + 1..].iter().map(|l| l.trim()));
    Some(out)
}

/// Extracts the candidate from a completion. Never panics; anything that
/// does not fit the task's delimiter contract is a [`ParseError`].
pub fn parse_generation(task: Task, raw: &str, original: &QaExample) -> Result<Candidate, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::EmptyPayload);
    }
    let lines = after_delimiter(task, raw).ok_or_else(|| ParseError::MissingDelimiter {
        delimiter: task.delimiter().to_string(),
    })?;
    let head = lines[0];
    if head.is_empty() {
        return Err(ParseError::EmptyPayload);
    }
    match task {
        Task::HeaderSynonym | Task::HeaderAbbrev => {
            let names = split_cells(head);
            let width = original.table.width();
            if names.len() != width {
                return Err(ParseError::WrongArity {
                    expected: width,
                    got: names.len(),
                });
            }
            if names.iter().any(String::is_empty) {
                return Err(ParseError::EmptyPayload);
            }
            let renames = original
                .table
                .header
                .iter()
                .zip(&names)
                .filter(|(old, new)| old != new)
                .map(|(old, new)| (old.clone(), new.clone()))
                .collect();
            Ok(Candidate::Header { names, renames })
        }
        Task::ColExtension => {
            let rest: Vec<&str> = lines[1..].iter().copied().filter(|l| !l.is_empty()).collect();
            let Some((name_line, rows)) = rest.split_first() else {
                return Err(ParseError::EmptyPayload);
            };
            let names = split_cells(name_line);
            if names.len() < 2 {
                return Err(ParseError::WrongArity {
                    expected: 2,
                    got: names.len(),
                });
            }
            let height = original.table.height();
            if rows.len() < height {
                return Err(ParseError::WrongArity {
                    expected: height,
                    got: rows.len(),
                });
            }
            let mut cells = Vec::with_capacity(height);
            for row in &rows[..height] {
                let parts = split_cells(row);
                if parts.len() != names.len() {
                    return Err(ParseError::WrongArity {
                        expected: names.len(),
                        got: parts.len(),
                    });
                }
                cells.push(parts);
            }
            Ok(Candidate::Extension {
                column: head.to_string(),
                names,
                cells,
            })
        }
        Task::ColMasking => Ok(Candidate::Mask {
            column: head.to_string(),
        }),
        Task::ColAdding => {
            let columns = split_cells(head);
            if columns.iter().any(String::is_empty) {
                return Err(ParseError::EmptyPayload);
            }
            if !(1..=2).contains(&columns.len()) {
                return Err(ParseError::WrongArity {
                    expected: 2,
                    got: columns.len(),
                });
            }
            Ok(Candidate::Add { columns })
        }
        Task::Paraphrase(_) => Ok(Candidate::Paraphrase {
            question: head.to_string(),
        }),
    }
}

fn column_of(table: &Table, name: &str) -> Result<usize, Rejection> {
    table.column_index(name).ok_or_else(|| Rejection::UnknownColumn {
        detail: name.to_string(),
    })
}

/// Builds the post example a candidate describes. `candidate_table` is
/// required for column adding; `seed` picks the insertion positions.
pub fn apply_candidate(
    original: &QaExample,
    candidate: &Candidate,
    candidate_table: Option<&Table>,
    seed: u64,
) -> Result<QaExample, Rejection> {
    let mut post = original.clone();
    match candidate {
        Candidate::Paraphrase { question } => post.question = question.clone(),
        Candidate::Header { names, .. } => {
            if names.len() != original.table.width() {
                return Err(Rejection::InvalidTable {
                    detail: "header arity changed".into(),
                });
            }
            post.table.header = names.clone();
        }
        Candidate::Extension { column, names, cells } => {
            let j = column_of(&original.table, column)?;
            if cells.len() != original.table.height() || cells.iter().any(|r| r.len() != names.len()) {
                return Err(Rejection::InvalidTable {
                    detail: "split cells do not match the table".into(),
                });
            }
            post.table.remove_column(j);
            for k in (0..names.len()).rev() {
                let col = cells.iter().map(|r| r[k].clone()).collect();
                post.table.insert_column(j, names[k].clone(), col);
            }
        }
        Candidate::Mask { column } => {
            let j = column_of(&original.table, column)?;
            if original.table.width() < 2 {
                return Err(Rejection::InvalidTable {
                    detail: "cannot mask the only column".into(),
                });
            }
            post.table.remove_column(j);
        }
        Candidate::Add { columns } => {
            let cand = candidate_table.ok_or_else(|| Rejection::InvalidTable {
                detail: "no candidate table".into(),
            })?;
            let mut rng = SeededRng::new(seed);
            for name in columns {
                let j = column_of(cand, name)?;
                if post.table.column_index(name).is_some() {
                    return Err(Rejection::DuplicateHeader { detail: name.clone() });
                }
                if cand.height() == 0 && post.table.height() > 0 {
                    return Err(Rejection::InvalidTable {
                        detail: "candidate table has no rows".into(),
                    });
                }
                let cells = (0..post.table.height())
                    .map(|i| cand.rows[i % cand.height()][j].clone())
                    .collect();
                let at = rng.below(post.table.width() + 1);
                post.table.insert_column(at, cand.header[j].clone(), cells);
            }
        }
    }
    Ok(post)
}
