use serde_json::{json, Value};

use super::shuffle::{column_permutation, permute_columns, row_permutation};
use super::{Edit, Operator, PerturbError, Resources};
use crate::model::{PerturbationSpec, PerturbationType, Provenance, QaExample, Table};
use crate::rng::SeededRng;
use crate::rules::{
    detect_inferable_columns, mask_column, rta_column_extension_with, rta_header_abbreviation,
    rta_header_synonym, rta_nlq_synonym_attack, SynonymLexicon, DEFAULT_DELIMITERS,
    DEFAULT_RENAME_PROBABILITY,
};
use crate::retrieval::{add_columns, AddColumnsError, DEFAULT_K};

fn param_f64(spec: &PerturbationSpec, key: &str, default: f64) -> Result<f64, PerturbError> {
    match spec.params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| PerturbError::InvalidSpec(format!("`{key}` must be a number"))),
    }
}

fn param_usize(spec: &PerturbationSpec, key: &str) -> Result<Option<usize>, PerturbError> {
    match spec.params.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .map(|n| Some(n as usize))
            .ok_or_else(|| PerturbError::InvalidSpec(format!("`{key}` must be a non-negative integer"))),
    }
}

fn param_strings(spec: &PerturbationSpec, key: &str) -> Result<Option<Vec<String>>, PerturbError> {
    match spec.params.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .map(Some)
            .ok_or_else(|| PerturbError::InvalidSpec(format!("`{key}` must be a list of strings"))),
        Some(Value::String(s)) => Ok(Some(s.split(',').map(str::to_string).collect())),
        Some(_) => Err(PerturbError::InvalidSpec(format!("`{key}` must be a list of strings"))),
    }
}

/// Columns holding a cell equal to one of the example's answers.
pub(crate) fn answer_columns(ex: &QaExample) -> Vec<usize> {
    (0..ex.table.width())
        .filter(|&j| {
            ex.table
                .column(j)
                .any(|c| ex.answers.iter().any(|a| a.trim() == c.trim()))
        })
        .collect()
}

/// Answers present as cells before but not after.
pub(crate) fn answers_lost(ex: &QaExample, after: &Table) -> bool {
    ex.answers
        .iter()
        .any(|a| ex.table.contains_cell(a) && !after.contains_cell(a))
}

fn table_edit(table: Table, details: Value) -> Edit {
    Edit::Applied {
        table: Some(table),
        question: None,
        details,
    }
}

pub struct HeaderSynonym;

impl Operator for HeaderSynonym {
    fn kind(&self) -> PerturbationType {
        PerturbationType::HeaderSynonym
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, res: &Resources) -> Result<Edit, PerturbError> {
        let lex = res.header_synonyms.as_ref().ok_or(PerturbError::MissingResource {
            kind: self.kind(),
            resource: "header synonym lexicon",
        })?;
        let p = param_f64(spec, "p", DEFAULT_RENAME_PROBABILITY)?;
        let (table, renames) = rta_header_synonym(&ex.table, lex, spec.seed, p);
        if renames.is_empty() {
            return Ok(Edit::Skip("no header renamed".into()));
        }
        Ok(table_edit(table, json!({ "renames": renames })))
    }
}

pub struct HeaderAbbreviation;

impl Operator for HeaderAbbreviation {
    fn kind(&self) -> PerturbationType {
        PerturbationType::HeaderAbbrev
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, res: &Resources) -> Result<Edit, PerturbError> {
        let rules = res.abbreviations.as_ref().ok_or(PerturbError::MissingResource {
            kind: self.kind(),
            resource: "abbreviation rules",
        })?;
        let p = param_f64(spec, "p", DEFAULT_RENAME_PROBABILITY)?;
        let (table, renames) = rta_header_abbreviation(&ex.table, rules, spec.seed, p);
        if renames.is_empty() {
            return Ok(Edit::Skip("no header abbreviated".into()));
        }
        Ok(table_edit(table, json!({ "renames": renames })))
    }
}

pub struct RowShuffle;

impl Operator for RowShuffle {
    fn kind(&self) -> PerturbationType {
        PerturbationType::RowShuffle
    }

    fn provenance(&self) -> Provenance {
        Provenance::Heuristic
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, _: &Resources) -> Result<Edit, PerturbError> {
        let perm = row_permutation(ex.table.height(), spec.seed);
        let mut t = ex.table.clone();
        t.rows = perm.iter().map(|&i| ex.table.rows[i].clone()).collect();
        Ok(table_edit(t, json!({ "permutation": perm })))
    }
}

pub struct ColumnShuffle;

impl Operator for ColumnShuffle {
    fn kind(&self) -> PerturbationType {
        PerturbationType::ColShuffle
    }

    fn provenance(&self) -> Provenance {
        Provenance::Heuristic
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, _: &Resources) -> Result<Edit, PerturbError> {
        let perm = column_permutation(ex.table.width(), spec.seed);
        Ok(table_edit(permute_columns(&ex.table, &perm), json!({ "permutation": perm })))
    }
}

pub struct ColumnExtension;

impl Operator for ColumnExtension {
    fn kind(&self) -> PerturbationType {
        PerturbationType::ColExtension
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, _: &Resources) -> Result<Edit, PerturbError> {
        let delimiters = param_strings(spec, "delimiters")?;
        let owned: Vec<String> = delimiters
            .unwrap_or_else(|| DEFAULT_DELIMITERS.iter().map(|d| d.to_string()).collect());
        let delims: Vec<&str> = owned.iter().map(String::as_str).filter(|d| !d.is_empty()).collect();
        let report = rta_column_extension_with(&ex.table, &delims, &answer_columns(ex));
        if !report.changed() {
            return Ok(Edit::Skip("no compound column".into()));
        }
        Ok(table_edit(report.table.clone(), json!({ "splits": report.splits })))
    }
}

pub struct ColumnMasking;

impl Operator for ColumnMasking {
    fn kind(&self) -> PerturbationType {
        PerturbationType::ColMasking
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, _: &Resources) -> Result<Edit, PerturbError> {
        let (column, evidence) = match param_usize(spec, "column")? {
            Some(j) => (j, Value::Null),
            None => {
                let protected = answer_columns(ex);
                let found: Vec<_> = detect_inferable_columns(&ex.table)
                    .into_iter()
                    .filter(|c| !protected.contains(&c.column))
                    .collect();
                if found.is_empty() {
                    return Ok(Edit::Skip("no inferable column".into()));
                }
                let pick = &found[SeededRng::new(spec.seed).below(found.len())];
                (pick.column, serde_json::to_value(pick).expect("serializes"))
            }
        };
        let table = mask_column(&ex.table, column).map_err(|e| PerturbError::Operator {
            kind: self.kind(),
            message: e.to_string(),
        })?;
        if answers_lost(ex, &table) {
            return Ok(Edit::Skip("masking would remove an answer".into()));
        }
        Ok(table_edit(
            table,
            json!({ "column": column, "name": ex.table.header[column], "evidence": evidence }),
        ))
    }
}

pub struct ColumnAdding;

impl Operator for ColumnAdding {
    fn kind(&self) -> PerturbationType {
        PerturbationType::ColAdding
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, res: &Resources) -> Result<Edit, PerturbError> {
        let index = res.corpus.as_ref().ok_or(PerturbError::MissingResource {
            kind: self.kind(),
            resource: "candidate table corpus",
        })?;
        let n = param_usize(spec, "n")?.unwrap_or(1);
        let k = param_usize(spec, "k")?.unwrap_or(DEFAULT_K);
        let hits = index.retrieve(&ex.table, k);
        let candidates: Vec<&Table> = hits.iter().map(|h| h.table).collect();
        match add_columns(&ex.table, &candidates, n, spec.seed) {
            Ok((table, added)) => {
                let retrieved: Vec<usize> = hits.iter().map(|h| h.index).collect();
                let added: Vec<Value> = added
                    .iter()
                    .map(|a| {
                        json!({
                            "name": a.name,
                            "position": a.position,
                            "corpus_table": retrieved[a.source_table],
                            "source_column": a.source_column,
                        })
                    })
                    .collect();
                Ok(table_edit(table, json!({ "added": added, "retrieved": retrieved })))
            }
            Err(AddColumnsError::NoInsertableColumn) => Ok(Edit::Skip("no insertable column".into())),
            Err(e) => Err(PerturbError::InvalidSpec(e.to_string())),
        }
    }
}

/// Dictionary synonym attack on the question, word or sentence level.
pub struct QuestionSynonym {
    kind: PerturbationType,
}

impl QuestionSynonym {
    pub fn word() -> Self {
        QuestionSynonym {
            kind: PerturbationType::NlqWord,
        }
    }

    pub fn sentence() -> Self {
        QuestionSynonym {
            kind: PerturbationType::NlqSentence,
        }
    }

    fn lexicon<'r>(&self, res: &'r Resources) -> Option<&'r SynonymLexicon> {
        match self.kind {
            PerturbationType::NlqSentence => res.nlq_sentence.as_deref(),
            _ => res.nlq_word.as_deref(),
        }
    }
}

pub const DEFAULT_ATTACK_BUDGET: usize = 5;

impl Operator for QuestionSynonym {
    fn kind(&self) -> PerturbationType {
        self.kind
    }

    fn provenance(&self) -> Provenance {
        Provenance::Rta
    }

    fn apply(&self, ex: &QaExample, spec: &PerturbationSpec, res: &Resources) -> Result<Edit, PerturbError> {
        let lex = self.lexicon(res).ok_or(PerturbError::MissingResource {
            kind: self.kind,
            resource: "question lexicon",
        })?;
        let budget = param_usize(spec, "budget")?.unwrap_or(DEFAULT_ATTACK_BUDGET);
        let model = res
            .nlq_model
            .as_deref()
            .map(|m| (m as &dyn crate::adapters::ModelAdapter, &ex.table));
        let found = rta_nlq_synonym_attack(&ex.question, lex, model, budget).map_err(|e| {
            PerturbError::Operator {
                kind: self.kind,
                message: e.to_string(),
            }
        })?;
        Ok(match found {
            None if model.is_some() => Edit::Skip("no substitution changed the prediction".into()),
            None => Edit::Skip("no lexicon phrase in question".into()),
            Some(s) => Edit::Applied {
                table: None,
                question: Some(s.question.clone()),
                details: json!({ "from": s.from, "to": s.to, "tried": s.tried }),
            },
        })
    }
}
