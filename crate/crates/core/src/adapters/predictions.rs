use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdapterError, ModelAdapter};
use crate::exec::Execution;
use crate::model::{PerturbedPair, QaExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pre,
    Post,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Pre => "pre",
            Side::Post => "post",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub side: Side,
    pub prediction: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredictionError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("line {line}: malformed prediction record: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: unknown side `{side}` (expected pre or post)")]
    UnknownSide { line: usize, side: String },
    #[error("line {line}: duplicate prediction for ({id}, {side})")]
    Duplicate { line: usize, id: String, side: Side },
}

/// Model answers keyed by (example id, side). Iteration is sorted by id,
/// then side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    by_id: BTreeMap<String, [Option<Vec<String>>; 2]>,
}

fn slot(side: Side) -> usize {
    match side {
        Side::Pre => 0,
        Side::Post => 1,
    }
}

impl PredictionSet {
    pub fn get(&self, id: &str, side: Side) -> Option<&Vec<String>> {
        self.by_id.get(id).and_then(|s| s[slot(side)].as_ref())
    }

    /// Fails with the existing answer when (id, side) is already present.
    pub fn insert(&mut self, id: &str, side: Side, prediction: Vec<String>) -> Result<(), Vec<String>> {
        let entry = self.by_id.entry(id.to_string()).or_default();
        match &entry[slot(side)] {
            Some(existing) => Err(existing.clone()),
            None => {
                entry[slot(side)] = Some(prediction);
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.by_id
            .values()
            .map(|s| s.iter().filter(|x| x.is_some()).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<PredictionRecord> {
        let mut out = Vec::with_capacity(self.len());
        for (id, sides) in &self.by_id {
            for side in [Side::Pre, Side::Post] {
                if let Some(p) = &sides[slot(side)] {
                    out.push(PredictionRecord {
                        id: id.clone(),
                        side,
                        prediction: p.clone(),
                    });
                }
            }
        }
        out
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    side: String,
    prediction: Vec<String>,
}

pub fn load_predictions<R: BufRead>(reader: R) -> Result<PredictionSet, PredictionError> {
    let mut set = PredictionSet::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| PredictionError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| PredictionError::Json {
            line: line_no,
            message: e.to_string(),
        })?;
        let side = match raw.side.as_str() {
            "pre" => Side::Pre,
            "post" => Side::Post,
            _ => {
                return Err(PredictionError::UnknownSide {
                    line: line_no,
                    side: raw.side,
                })
            }
        };
        if set.insert(&raw.id, side, raw.prediction).is_err() {
            return Err(PredictionError::Duplicate {
                line: line_no,
                id: raw.id,
                side,
            });
        }
    }
    Ok(set)
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet, PredictionError> {
    let f = File::open(path).map_err(|e| PredictionError::Io(format!("{}: {e}", path.display())))?;
    load_predictions(BufReader::new(f))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{id} ({side}): {source}")]
pub struct PredictError {
    pub id: String,
    pub side: Side,
    pub source: AdapterError,
}

/// Asks the adapter about both sides of every pair.
pub fn predict_pairs(
    adapter: &dyn ModelAdapter,
    pairs: &[PerturbedPair],
    exec: Execution,
) -> Result<PredictionSet, PredictError> {
    let answered = exec.try_map(pairs, |p| {
        let mut out = Vec::with_capacity(2);
        for (side, ex) in [(Side::Pre, &p.pre), (Side::Post, &p.post)] {
            let a = adapter.answer(&ex.table, &ex.question).map_err(|source| PredictError {
                id: p.id.clone(),
                side,
                source,
            })?;
            out.push((side, a));
        }
        Ok((p.id.clone(), out))
    })?;
    let mut set = PredictionSet::default();
    for (id, sides) in answered {
        for (side, a) in sides {
            // Pair ids are unique; a clash only drops the later answer.
            let _ = set.insert(&id, side, a);
        }
    }
    Ok(set)
}

/// Asks the adapter about every example; answers are stored on the pre side.
pub fn predict_examples(
    adapter: &dyn ModelAdapter,
    examples: &[QaExample],
    exec: Execution,
) -> Result<PredictionSet, PredictError> {
    let answered = exec.try_map(examples, |ex| {
        adapter
            .answer(&ex.table, &ex.question)
            .map(|a| (ex.id.clone(), a))
            .map_err(|source| PredictError {
                id: ex.id.clone(),
                side: Side::Pre,
                source,
            })
    })?;
    let mut set = PredictionSet::default();
    for (id, a) in answered {
        let _ = set.insert(&id, Side::Pre, a);
    }
    Ok(set)
}
