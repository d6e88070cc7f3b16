//! Tables, questions, and paired pre/post perturbation records.
//!
//! Every cell is a string. Numeric interpretation only happens inside
//! [`crate::metrics::normalize_answer`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A relational table: an ordered header and rows of string cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl Table {
    pub fn new<H, R, C>(header: H, rows: R) -> Self
    where
        H: IntoIterator,
        H::Item: Into<String>,
        R: IntoIterator<Item = C>,
        C: IntoIterator,
        C::Item: Into<String>,
    {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(Into::into).collect())
                .collect(),
            caption: None,
        }
    }

    pub fn width(&self) -> usize {
        self.header.len()
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    /// Cells of column `j`, top to bottom.
    pub fn column(&self, j: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[j].as_str())
    }

    /// Index of the first column whose name matches `name` case-insensitively.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        let wanted = name.trim().to_lowercase();
        self.header
            .iter()
            .position(|h| h.trim().to_lowercase() == wanted)
    }

    /// True if some cell equals `value` after trimming.
    pub fn contains_cell(&self, value: &str) -> bool {
        let v = value.trim();
        self.rows.iter().flatten().any(|c| c.trim() == v)
    }

    /// Removes column `j` from the header and every row.
    pub(crate) fn remove_column(&mut self, j: usize) {
        self.header.remove(j);
        for row in &mut self.rows {
            row.remove(j);
        }
    }

    pub(crate) fn insert_column(&mut self, at: usize, name: String, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.rows.len());
        self.header.insert(at, name);
        for (row, cell) in self.rows.iter_mut().zip(cells) {
            row.insert(at, cell);
        }
    }

    /// Lists every broken table invariant; empty when the table is valid.
    pub fn validate(&self) -> Vec<String> {
        validate_table(self)
    }
}

/// Checks the table invariants and returns one message per violation.
pub fn validate_table(table: &Table) -> Vec<String> {
    let mut out = Vec::new();
    if table.header.is_empty() {
        out.push("empty header".to_string());
    }
    for (j, name) in table.header.iter().enumerate() {
        if name.trim().is_empty() {
            out.push(format!("empty header name at {j}"));
        }
    }
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.header.len() {
            out.push(format!(
                "row {i}: row length ≠ header length ({} vs {})",
                row.len(),
                table.header.len()
            ));
        }
    }
    out
}

/// One question over one table, with its gold answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub table: Table,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_in_sequence: Option<u32>,
}

/// An invariant violation located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }

    fn nested(self, prefix: &str) -> Self {
        let path = if self.path.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}.{}", self.path)
        };
        Violation { path, ..self }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl QaExample {
    pub fn new(
        id: impl Into<String>,
        table: Table,
        question: impl Into<String>,
        answers: Vec<String>,
    ) -> Self {
        QaExample {
            id: id.into(),
            table,
            question: question.into(),
            answers,
            sequence_id: None,
            position_in_sequence: None,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push(Violation::new("id", "empty id"));
        }
        for msg in validate_table(&self.table) {
            out.push(Violation::new("table", msg));
        }
        if self.answers.is_empty() {
            out.push(Violation::new("answers", "at least one answer is required"));
        }
        if self.sequence_id.is_some() != self.position_in_sequence.is_some() {
            out.push(Violation::new(
                "sequence_id",
                "sequence_id and position_in_sequence must be both present or both absent",
            ));
        }
        out
    }
}

/// The input part a perturbation alters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Header,
    Content,
    Nlq,
    Mix,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Header => "header",
            Level::Content => "content",
            Level::Nlq => "nlq",
            Level::Mix => "mix",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The ten perturbation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationType {
    HeaderSynonym,
    HeaderAbbrev,
    RowShuffle,
    ColShuffle,
    ColExtension,
    ColMasking,
    ColAdding,
    NlqWord,
    NlqSentence,
    Mix,
}

impl PerturbationType {
    pub const ALL: [PerturbationType; 10] = [
        PerturbationType::HeaderSynonym,
        PerturbationType::HeaderAbbrev,
        PerturbationType::RowShuffle,
        PerturbationType::ColShuffle,
        PerturbationType::ColExtension,
        PerturbationType::ColMasking,
        PerturbationType::ColAdding,
        PerturbationType::NlqWord,
        PerturbationType::NlqSentence,
        PerturbationType::Mix,
    ];

    pub fn level(self) -> Level {
        use PerturbationType::*;
        match self {
            HeaderSynonym | HeaderAbbrev => Level::Header,
            RowShuffle | ColShuffle | ColExtension | ColMasking | ColAdding => Level::Content,
            NlqWord | NlqSentence => Level::Nlq,
            Mix => Level::Mix,
        }
    }

    pub fn as_str(self) -> &'static str {
        use PerturbationType::*;
        match self {
            HeaderSynonym => "header_synonym",
            HeaderAbbrev => "header_abbrev",
            RowShuffle => "row_shuffle",
            ColShuffle => "col_shuffle",
            ColExtension => "col_extension",
            ColMasking => "col_masking",
            ColAdding => "col_adding",
            NlqWord => "nlq_word",
            NlqSentence => "nlq_sentence",
            Mix => "mix",
        }
    }

    /// Row and column order shuffles.
    pub fn is_shuffle(self) -> bool {
        matches!(self, PerturbationType::RowShuffle | PerturbationType::ColShuffle)
    }
}

impl fmt::Display for PerturbationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown perturbation type `{0}`")]
pub struct UnknownType(pub String);

impl FromStr for PerturbationType {
    type Err = UnknownType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_lowercase().replace('-', "_");
        PerturbationType::ALL
            .into_iter()
            .find(|t| t.as_str() == key)
            .ok_or_else(|| UnknownType(s.to_string()))
    }
}

/// Level, type, seed, and type-specific parameters of one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub level: Level,
    #[serde(rename = "type")]
    pub kind: PerturbationType,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationType, seed: u64) -> Self {
        PerturbationSpec {
            level: kind.level(),
            kind,
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Reads the `constituents` parameter of a mix spec. Entries may be full
    /// spec objects or bare type names.
    pub fn mix_constituents(&self) -> Result<Vec<PerturbationSpec>, String> {
        let raw = match self.params.get("constituents") {
            Some(v) => v,
            None => return Err("mix spec lacks `constituents`".to_string()),
        };
        let items: Vec<Value> = match raw {
            Value::Array(items) => items.clone(),
            Value::String(s) => s
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| Value::String(p.trim().to_string()))
                .collect(),
            _ => return Err("`constituents` must be a list".to_string()),
        };
        items
            .into_iter()
            .map(|item| match item {
                Value::String(name) => name
                    .parse::<PerturbationType>()
                    .map(|t| PerturbationSpec::new(t, 0))
                    .map_err(|e| e.to_string()),
                other => serde_json::from_value::<PerturbationSpec>(other)
                    .map_err(|e| format!("bad constituent: {e}")),
            })
            .collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.kind.level() != self.level {
            out.push(Violation::new(
                "level",
                format!(
                    "type {} belongs to level {}, not {}",
                    self.kind,
                    self.kind.level(),
                    self.level
                ),
            ));
        }
        if self.kind == PerturbationType::Mix {
            match self.mix_constituents() {
                Err(e) => out.push(Violation::new("params.constituents", e)),
                Ok(parts) => {
                    if let Err(e) = check_mix_levels(&parts) {
                        out.push(Violation::new("params.constituents", e));
                    }
                }
            }
        }
        out
    }
}

/// Checks the 2–3 constituent, pairwise-distinct, non-mix level rule.
pub fn check_mix_levels(parts: &[PerturbationSpec]) -> Result<(), String> {
    if !(2..=3).contains(&parts.len()) {
        return Err(format!(
            "mix needs 2 or 3 constituents, got {}",
            parts.len()
        ));
    }
    let mut seen = Vec::new();
    for p in parts {
        let level = p.kind.level();
        if level == Level::Mix {
            return Err("mix constituents cannot be mix".to_string());
        }
        if seen.contains(&level) {
            return Err(format!("duplicate level: {level}"));
        }
        seen.push(level);
    }
    Ok(())
}

/// Who or what produced a perturbed pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Heuristic,
    Rta,
    Leta,
    Human,
}

/// Parallel pre/post examples joined by id and the perturbation that links them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPair {
    pub id: String,
    pub perturbation: PerturbationSpec,
    pub provenance: Provenance,
    pub pre: QaExample,
    pub post: QaExample,
}

impl PerturbedPair {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .perturbation
            .validate()
            .into_iter()
            .map(|v| v.nested("perturbation"))
            .collect();
        out.extend(self.pre.validate().into_iter().map(|v| v.nested("pre")));
        out.extend(self.post.validate().into_iter().map(|v| v.nested("post")));
        if self.pre.id != self.id {
            out.push(Violation::new("pre.id", "pre.id differs from pair id"));
        }
        if self.post.id != self.id {
            out.push(Violation::new("post.id", "post.id differs from pair id"));
        }
        if self.perturbation.kind.is_shuffle() && self.pre.answers != self.post.answers {
            out.push(Violation::new(
                "post.answers",
                "shuffles must not change the answers",
            ));
        }
        out
    }
}

/// Which record schema a dataset file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Examples,
    Pairs,
}

/// Homogeneous, ordered records.
#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Examples(Vec<QaExample>),
    Pairs(Vec<PerturbedPair>),
}

/// A named, ordered collection of examples or pairs with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub records: Records,
}

impl Dataset {
    pub fn examples(name: impl Into<String>, examples: Vec<QaExample>) -> Self {
        Dataset {
            name: name.into(),
            records: Records::Examples(examples),
        }
    }

    pub fn pairs(name: impl Into<String>, pairs: Vec<PerturbedPair>) -> Self {
        Dataset {
            name: name.into(),
            records: Records::Pairs(pairs),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self.records {
            Records::Examples(_) => DatasetKind::Examples,
            Records::Pairs(_) => DatasetKind::Pairs,
        }
    }

    pub fn len(&self) -> usize {
        match &self.records {
            Records::Examples(v) => v.len(),
            Records::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_examples(&self) -> Option<&[QaExample]> {
        match &self.records {
            Records::Examples(v) => Some(v),
            Records::Pairs(_) => None,
        }
    }

    pub fn as_pairs(&self) -> Option<&[PerturbedPair]> {
        match &self.records {
            Records::Pairs(v) => Some(v),
            Records::Examples(_) => None,
        }
    }

    pub fn into_examples(self) -> Option<Vec<QaExample>> {
        match self.records {
            Records::Examples(v) => Some(v),
            Records::Pairs(_) => None,
        }
    }

    pub fn into_pairs(self) -> Option<Vec<PerturbedPair>> {
        match self.records {
            Records::Pairs(v) => Some(v),
            Records::Examples(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_table_has_no_violations() {
        let t = Table::new(["Year", "Champion"], [["2001", "Alice"], ["2002", "Bob"]]);
        assert!(validate_table(&t).is_empty());
    }

    #[test]
    fn blank_header_name_is_reported_with_index() {
        let t = Table::new([""], Vec::<Vec<String>>::new());
        assert_eq!(validate_table(&t), vec!["empty header name at 0"]);
    }

    #[test]
    fn empty_header_is_reported() {
        let t = Table::new(Vec::<String>::new(), Vec::<Vec<String>>::new());
        assert_eq!(validate_table(&t), vec!["empty header"]);
    }

    #[test]
    fn ragged_row_is_reported() {
        let t = Table::new(["A"], [["1", "2"]]);
        let v = validate_table(&t);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("row length ≠ header length"));
    }

    #[test]
    fn half_present_sequence_fields_are_rejected() {
        let mut ex = QaExample::new("x", Table::new(["A"], [["1"]]), "q", vec!["1".into()]);
        ex.sequence_id = Some("s1".into());
        assert_eq!(ex.validate()[0].path, "sequence_id");
        ex.position_in_sequence = Some(0);
        assert!(ex.validate().is_empty());
    }

    #[test]
    fn type_names_round_trip() {
        for t in PerturbationType::ALL {
            assert_eq!(t.as_str().parse::<PerturbationType>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
        assert!("col_rotate".parse::<PerturbationType>().is_err());
    }

    #[test]
    fn spec_level_must_match_type() {
        let mut spec = PerturbationSpec::new(PerturbationType::RowShuffle, 1);
        assert!(spec.validate().is_empty());
        spec.level = Level::Header;
        assert_eq!(spec.validate().len(), 1);
    }

    #[test]
    fn mix_constituents_accept_names_and_objects() {
        let spec = PerturbationSpec::new(PerturbationType::Mix, 3)
            .with_param("constituents", "header_synonym,nlq_word");
        let parts = spec.mix_constituents().unwrap();
        assert_eq!(parts[0].kind, PerturbationType::HeaderSynonym);
        assert_eq!(parts[1].kind, PerturbationType::NlqWord);
        assert!(spec.validate().is_empty());

        let obj = serde_json::json!([
            {"level": "content", "type": "row_shuffle", "seed": 0, "params": {}},
            {"level": "content", "type": "col_shuffle", "seed": 0}
        ]);
        let dup = PerturbationSpec::new(PerturbationType::Mix, 0).with_param("constituents", obj);
        let v = dup.validate();
        assert_eq!(v[0].message, "duplicate level: content");
    }

    #[test]
    fn pair_ids_must_agree() {
        let ex = QaExample::new("a", Table::new(["A"], [["1"]]), "q", vec!["1".into()]);
        let mut post = ex.clone();
        post.id = "b".into();
        let pair = PerturbedPair {
            id: "a".into(),
            perturbation: PerturbationSpec::new(PerturbationType::RowShuffle, 0),
            provenance: Provenance::Heuristic,
            pre: ex,
            post,
        };
        let v = pair.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "post.id");
    }
}
