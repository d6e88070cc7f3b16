use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Task;
use crate::model::{QaExample, Table};
use crate::rng::SeededRng;

/// One worked example: the context shown to the generator and the output
/// it should produce. `output` is the text after the task delimiter; for
/// column extension it spans several lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_table: Option<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    pub output: String,
}

impl Demonstration {
    /// The demonstration's context as an example, with an empty table when
    /// none is given.
    pub fn to_example(&self, id: &str) -> QaExample {
        QaExample {
            id: id.to_string(),
            table: self.table.clone().unwrap_or(Table {
                header: Vec::new(),
                rows: Vec::new(),
                caption: None,
            }),
            question: self.question.clone().unwrap_or_default(),
            answers: self.answers.clone(),
            sequence_id: None,
            position_in_sequence: None,
        }
    }

    fn missing_context(&self) -> Option<&'static str> {
        match self.task {
            Task::Paraphrase(_) if self.question.is_none() => Some("question"),
            Task::Paraphrase(_) => None,
            _ if self.table.is_none() => Some("table"),
            Task::ColAdding if self.candidate_table.is_none() => Some("candidate_table"),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("reading demonstrations: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {task} demonstration lacks `{what}`")]
    MissingContext { line: usize, task: Task, what: &'static str },
    #[error("{task} needs at least {need} demonstrations, pool has {have}")]
    TooSmall { task: Task, need: usize, have: usize },
}

/// Demonstrations grouped by task, each group in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DemonstrationPool {
    groups: BTreeMap<Task, Vec<Demonstration>>,
}

impl DemonstrationPool {
    pub fn from_demos(demos: impl IntoIterator<Item = Demonstration>) -> Self {
        let mut pool = DemonstrationPool::default();
        for d in demos {
            pool.groups.entry(d.task).or_default().push(d);
        }
        pool
    }

    /// Reads JSONL, one demonstration per line. Blank lines are skipped.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, PoolError> {
        let mut pool = DemonstrationPool::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let d: Demonstration = serde_json::from_str(&line).map_err(|e| PoolError::Json {
                line: i + 1,
                message: e.to_string(),
            })?;
            if let Some(what) = d.missing_context() {
                return Err(PoolError::MissingContext {
                    line: i + 1,
                    task: d.task,
                    what,
                });
            }
            pool.groups.entry(d.task).or_default().push(d);
        }
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<Self, PoolError> {
        let f = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(f))
    }

    pub fn get(&self, task: Task) -> &[Demonstration] {
        self.groups.get(&task).map_or(&[], Vec::as_slice)
    }

    pub fn tasks(&self) -> impl Iterator<Item = Task> + '_ {
        self.groups.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Demonstration> {
        self.groups.values().flatten()
    }

    /// Tasks whose group is smaller than the task's slot minimum.
    pub fn validate(&self) -> Vec<PoolError> {
        Task::all()
            .into_iter()
            .filter_map(|task| {
                let have = self.get(task).len();
                let need = task.slots().0;
                (have < need).then_some(PoolError::TooSmall { task, need, have })
            })
            .collect()
    }

    /// Demonstrations for one prompt. When the group exceeds the slot
    /// maximum, `seed` picks which ones; pool order is kept either way.
    pub fn select(&self, task: Task, seed: u64) -> Result<Vec<&Demonstration>, PoolError> {
        let group = self.get(task);
        let (need, max) = task.slots();
        if group.len() < need {
            return Err(PoolError::TooSmall {
                task,
                need,
                have: group.len(),
            });
        }
        if group.len() <= max {
            return Ok(group.iter().collect());
        }
        let mut picked = SeededRng::new(seed).sample_indices(group.len(), max);
        picked.sort_unstable();
        Ok(picked.into_iter().map(|i| &group[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::ParaphraseCategory;

    fn para(q: &str) -> Demonstration {
        Demonstration {
            task: Task::Paraphrase(ParaphraseCategory::General),
            table: None,
            candidate_table: None,
            question: Some(q.into()),
            answers: vec![],
            explanation: None,
            output: format!("{q}!"),
        }
    }

    #[test]
    fn four_demos_are_too_few() {
        let pool = DemonstrationPool::from_demos((0..4).map(|i| para(&format!("q{i}"))));
        let err = pool.select(Task::Paraphrase(ParaphraseCategory::General), 0).unwrap_err();
        assert!(matches!(err, PoolError::TooSmall { need: 5, have: 4, .. }));
    }

    #[test]
    fn oversized_pool_is_sampled_in_order() {
        let pool = DemonstrationPool::from_demos((0..12).map(|i| para(&format!("q{i:02}"))));
        let task = Task::Paraphrase(ParaphraseCategory::General);
        let a = pool.select(task, 3).unwrap();
        assert_eq!(a.len(), 8);
        let qs: Vec<&str> = a.iter().map(|d| d.question.as_deref().unwrap()).collect();
        let mut sorted = qs.clone();
        sorted.sort();
        assert_eq!(qs, sorted);
        assert_eq!(a, pool.select(task, 3).unwrap());
    }

    #[test]
    fn missing_context_is_rejected() {
        let line = r#"{"task":"header_synonym","output":"A | B"}"#;
        let err = DemonstrationPool::parse(line.as_bytes()).unwrap_err();
        assert!(matches!(err, PoolError::MissingContext { what: "table", .. }));
    }
}
