//! Lexical table retrieval for column adding.
//!
//! Each table becomes a document of its header names plus its first two
//! rows. Terms are lowercased alphanumeric runs of at least two characters,
//! weighted by raw term frequency times `ln((1 + N) / (1 + df)) + 1`, and
//! compared by cosine similarity. Ties rank in corpus order.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::model::Table;
use crate::rng::SeededRng;

pub const DEFAULT_K: usize = 3;
const INDEXED_ROWS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
}

/// Lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

pub fn document_terms(table: &Table) -> Vec<String> {
    let mut terms = Vec::new();
    for h in &table.header {
        terms.extend(tokenize(h));
    }
    for row in table.rows.iter().take(INDEXED_ROWS) {
        for c in row {
            terms.extend(tokenize(c));
        }
    }
    terms
}

fn term_counts(terms: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in terms {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Unit-length sparse vector sorted by term id.
type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct TableIndex {
    tables: Vec<Table>,
    vocab: HashMap<String, usize>,
    df: Vec<usize>,
    docs: Vec<SparseVec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit<'a> {
    /// Position of the table in the corpus.
    pub index: usize,
    pub score: f64,
    #[serde(skip)]
    pub table: &'a Table,
}

fn normalize(mut v: SparseVec) -> SparseVec {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut v {
            *w /= norm;
        }
    }
    v
}

impl TableIndex {
    pub fn build(tables: Vec<Table>) -> Result<Self, RetrievalError> {
        if tables.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut vocab: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        let counted: Vec<BTreeMap<usize, usize>> = tables
            .iter()
            .map(|t| {
                let terms = document_terms(t);
                let mut ids = BTreeMap::new();
                for (term, c) in term_counts(&terms) {
                    let next = vocab.len();
                    let id = *vocab.entry(term.to_string()).or_insert(next);
                    if id == df.len() {
                        df.push(0);
                    }
                    df[id] += 1;
                    ids.insert(id, c);
                }
                ids
            })
            .collect();
        let mut index = TableIndex {
            tables,
            vocab,
            df,
            docs: Vec::new(),
        };
        index.docs = counted
            .iter()
            .map(|ids| normalize(ids.iter().map(|(&id, &c)| (id, c as f64 * index.idf_of(id))).collect()))
            .collect();
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    fn n(&self) -> f64 {
        self.tables.len() as f64
    }

    fn idf_of(&self, id: usize) -> f64 {
        ((1.0 + self.n()) / (1.0 + self.df[id] as f64)).ln() + 1.0
    }

    /// Weight of a term with document frequency `df`.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.vocab.get(term).map_or(0, |&id| self.df[id]);
        ((1.0 + self.n()) / (1.0 + df as f64)).ln() + 1.0
    }

    /// Cosine similarity of `query` against every document, in corpus order.
    pub fn scores(&self, query: &Table) -> Vec<f64> {
        let terms = document_terms(query);
        let mut known: SparseVec = Vec::new();
        let mut unknown_sq = 0.0;
        for (term, c) in term_counts(&terms) {
            let w = c as f64 * self.idf(term);
            match self.vocab.get(term) {
                Some(&id) => known.push((id, w)),
                None => unknown_sq += w * w,
            }
        }
        known.sort_by_key(|&(id, _)| id);
        let norm = (known.iter().map(|(_, w)| w * w).sum::<f64>() + unknown_sq).sqrt();
        self.docs
            .iter()
            .map(|doc| {
                if norm == 0.0 {
                    return 0.0;
                }
                let (mut i, mut j, mut dot) = (0, 0, 0.0);
                while i < known.len() && j < doc.len() {
                    match known[i].0.cmp(&doc[j].0) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            dot += known[i].1 * doc[j].1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                dot / norm
            })
            .collect()
    }

    /// Top `k` tables by score, excluding tables equal to the query.
    pub fn retrieve(&self, query: &Table, k: usize) -> Vec<Hit<'_>> {
        let scores = self.scores(query);
        let mut hits: Vec<Hit<'_>> = scores
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| self.tables[i] != *query)
            .map(|(index, score)| Hit {
                index,
                score,
                table: &self.tables[index],
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
        hits.truncate(k.max(1));
        hits
    }
}

pub fn index_corpus(tables: Vec<Table>) -> Result<TableIndex, RetrievalError> {
    TableIndex::build(tables)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddColumnsError {
    #[error("can add one or two columns, not {0}")]
    InvalidCount(usize),
    #[error("no insertable column among the candidate tables")]
    NoInsertableColumn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AddedColumn {
    pub name: String,
    /// Index in the output table.
    pub position: usize,
    pub source_table: usize,
    pub source_column: usize,
}

/// Inserts `n` seeded-random columns from `candidates` whose names are new
/// to `table`. Candidate cells repeat cyclically to fill the host's rows.
pub fn add_columns(
    table: &Table,
    candidates: &[&Table],
    n: usize,
    seed: u64,
) -> Result<(Table, Vec<AddedColumn>), AddColumnsError> {
    if !(1..=2).contains(&n) {
        return Err(AddColumnsError::InvalidCount(n));
    }
    let mut pool: Vec<(usize, usize)> = Vec::new();
    let mut names: Vec<String> = table.header.iter().map(|h| h.trim().to_lowercase()).collect();
    for (ti, cand) in candidates.iter().enumerate() {
        if cand.rows.is_empty() && !table.rows.is_empty() {
            continue;
        }
        for (j, h) in cand.header.iter().enumerate() {
            let key = h.trim().to_lowercase();
            if key.is_empty() || names.contains(&key) {
                continue;
            }
            names.push(key);
            pool.push((ti, j));
        }
    }
    if pool.is_empty() {
        return Err(AddColumnsError::NoInsertableColumn);
    }
    let mut rng = SeededRng::new(seed);
    let chosen = rng.sample_indices(pool.len(), n);
    let mut out = table.clone();
    let mut added: Vec<AddedColumn> = Vec::new();
    for k in chosen {
        let (ti, j) = pool[k];
        let cand = candidates[ti];
        let cells: Vec<String> = (0..out.height())
            .map(|i| cand.rows[i % cand.height()][j].clone())
            .collect();
        let at = rng.below(out.width() + 1);
        out.insert_column(at, cand.header[j].clone(), cells);
        for a in &mut added {
            if a.position >= at {
                a.position += 1;
            }
        }
        added.push(AddedColumn {
            name: cand.header[j].clone(),
            position: at,
            source_table: ti,
            source_column: j,
        });
    }
    Ok((out, added))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_drops_short_tokens() {
        assert_eq!(tokenize("A 1st-place, b2"), ["1st", "place", "b2"]);
    }

    #[test]
    fn single_document_corpus() {
        let t = Table::new(["Year", "Team"], [["2001", "Ajax"]]);
        let idx = index_corpus(vec![t]).unwrap();
        assert_eq!(idx.len(), 1);
        let q = Table::new(["Goals"], [["3"]]);
        let hits = idx.retrieve(&q, DEFAULT_K);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].index, 0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(index_corpus(vec![]).unwrap_err(), RetrievalError::EmptyCorpus);
    }

    #[test]
    fn self_is_excluded() {
        let a = Table::new(["Year", "Team"], [["2001", "Ajax"]]);
        let b = Table::new(["Year", "Club"], [["2001", "Ajax"]]);
        let idx = index_corpus(vec![a.clone(), b]).unwrap();
        let hits = idx.retrieve(&a, 3);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].index, 1);
    }

    #[test]
    fn add_one_column() {
        let host = Table::new(["Team", "Score"], [["A", "1"], ["B", "2"], ["C", "3"]]);
        let cand = Table::new(["Team", "Attendance"], [["x", "100"], ["y", "200"]]);
        let (out, added) = add_columns(&host, &[&cand], 1, 7).unwrap();
        assert_eq!(out.width(), 3);
        assert_eq!(added[0].name, "Attendance");
        let col: Vec<&str> = out.column(added[0].position).collect();
        assert_eq!(col, ["100", "200", "100"]);
        let mut back = out.clone();
        back.remove_column(added[0].position);
        assert_eq!(back, host);
    }

    #[test]
    fn colliding_candidates_fail() {
        let host = Table::new(["Team"], [["A"]]);
        let cand = Table::new(["team"], [["x"]]);
        assert_eq!(
            add_columns(&host, &[&cand], 1, 0).unwrap_err(),
            AddColumnsError::NoInsertableColumn
        );
        assert_eq!(add_columns(&host, &[&cand], 3, 0).unwrap_err(), AddColumnsError::InvalidCount(3));
    }
}
