//! Line-delimited JSON reading and writing for datasets and table corpora.
//!
//! Output is byte-stable: struct fields serialize in declaration order,
//! parameter maps are sorted, and every record ends with a single `\n`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::model::{Dataset, DatasetKind, PerturbedPair, QaExample, Records, Table, Violation};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: schema violation at `{path}`: {message}")]
    Schema {
        line: usize,
        path: String,
        message: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
}

impl DatasetError {
    fn from_violation(line: usize, v: Violation) -> Self {
        DatasetError::Schema {
            line,
            path: v.path,
            message: v.message,
        }
    }
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines<R: BufRead>(reader: R) -> impl Iterator<Item = io::Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) => {
                let l = l.strip_suffix('\r').map(str::to_string).unwrap_or(l);
                if l.trim().is_empty() {
                    None
                } else {
                    Some(Ok((i + 1, l)))
                }
            }
            Err(e) => Some(Err(e)),
        })
}

fn decode_line<T: DeserializeOwned>(line_no: usize, line: &str) -> Result<T, DatasetError> {
    let mut de = serde_json::Deserializer::from_str(line);
    match serde_path_to_error::deserialize::<_, T>(&mut de) {
        Ok(v) => Ok(v),
        Err(err) => {
            let path = err.path().to_string();
            let inner = err.into_inner();
            if inner.is_data() {
                Err(DatasetError::Schema {
                    line: line_no,
                    path,
                    message: inner.to_string(),
                })
            } else {
                Err(DatasetError::Json {
                    line: line_no,
                    message: inner.to_string(),
                })
            }
        }
    }
}

/// Parses a JSONL stream into a validated dataset, preserving line order.
pub fn parse_dataset<R: BufRead>(
    reader: R,
    kind: DatasetKind,
    name: &str,
) -> Result<Dataset, DatasetError> {
    let mut seen = HashSet::new();
    let records = match kind {
        DatasetKind::Examples => {
            let mut out = Vec::new();
            for item in numbered_lines(reader) {
                let (n, line) = item?;
                let ex: QaExample = decode_line(n, &line)?;
                if let Some(v) = ex.validate().into_iter().next() {
                    return Err(DatasetError::from_violation(n, v));
                }
                if !seen.insert(ex.id.clone()) {
                    return Err(DatasetError::DuplicateId { line: n, id: ex.id });
                }
                out.push(ex);
            }
            Records::Examples(out)
        }
        DatasetKind::Pairs => {
            let mut out = Vec::new();
            for item in numbered_lines(reader) {
                let (n, line) = item?;
                let pair: PerturbedPair = decode_line(n, &line)?;
                if let Some(v) = pair.validate().into_iter().next() {
                    return Err(DatasetError::from_violation(n, v));
                }
                if !seen.insert(pair.id.clone()) {
                    return Err(DatasetError::DuplicateId {
                        line: n,
                        id: pair.id,
                    });
                }
                out.push(pair);
            }
            Records::Pairs(out)
        }
    };
    Ok(Dataset {
        name: name.to_string(),
        records,
    })
}

/// Writes one JSON object per record, each terminated by `\n`.
pub fn write_records<W: Write, T: Serialize>(mut out: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn serialize_dataset(dataset: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    let res = match &dataset.records {
        Records::Examples(v) => write_records(&mut buf, v),
        Records::Pairs(v) => write_records(&mut buf, v),
    };
    res.expect("writing to a Vec cannot fail");
    buf
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn read_dataset(path: &Path, kind: DatasetKind) -> Result<Dataset, DatasetError> {
    let f = File::open(path)?;
    parse_dataset(BufReader::new(f), kind, &dataset_name(path))
}

pub fn read_examples(path: &Path) -> Result<Vec<QaExample>, DatasetError> {
    Ok(read_dataset(path, DatasetKind::Examples)?
        .into_examples()
        .expect("parsed as examples"))
}

pub fn read_pairs(path: &Path) -> Result<Vec<PerturbedPair>, DatasetError> {
    Ok(read_dataset(path, DatasetKind::Pairs)?
        .into_pairs()
        .expect("parsed as pairs"))
}

/// Parses a corpus where each line is an example record (its `table` is
/// used) or a bare table record.
pub fn parse_table_corpus<R: BufRead>(reader: R) -> Result<Vec<Table>, DatasetError> {
    let mut out = Vec::new();
    for item in numbered_lines(reader) {
        let (n, line) = item?;
        let value: Value = decode_line(n, &line)?;
        let table_value = match value.get("table") {
            Some(t) => t.clone(),
            None => value,
        };
        let table: Table = serde_json::from_value(table_value).map_err(|e| DatasetError::Schema {
            line: n,
            path: "table".into(),
            message: e.to_string(),
        })?;
        if let Some(msg) = table.validate().into_iter().next() {
            return Err(DatasetError::Schema {
                line: n,
                path: "table".into(),
                message: msg,
            });
        }
        out.push(table);
    }
    Ok(out)
}

pub fn read_table_corpus(path: &Path) -> Result<Vec<Table>, DatasetError> {
    parse_table_corpus(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"id":"x1","table":{"header":["A"],"rows":[["1"]]},"question":"q?","answers":["1"]}"#;

    #[test]
    fn minimal_record_parses() {
        let ds = parse_dataset(MINIMAL.as_bytes(), DatasetKind::Examples, "t").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.as_examples().unwrap()[0].id, "x1");
    }

    #[test]
    fn ragged_row_is_a_schema_violation() {
        let line = r#"{"id":"x1","table":{"header":["A"],"rows":[["1","2"]]},"question":"q?","answers":["1"]}"#;
        let err = parse_dataset(line.as_bytes(), DatasetKind::Examples, "t").unwrap_err();
        match err {
            DatasetError::Schema { line, path, message } => {
                assert_eq!(line, 1);
                assert_eq!(path, "table");
                assert!(message.contains("row length ≠ header length"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line_number() {
        let text = format!("{MINIMAL}\n{{\"id\": \n");
        match parse_dataset(text.as_bytes(), DatasetKind::Examples, "t").unwrap_err() {
            DatasetError::Json { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_type_reports_path() {
        let line = r#"{"id":"x1","table":{"header":["A"],"rows":[[1]]},"question":"q?","answers":["1"]}"#;
        match parse_dataset(line.as_bytes(), DatasetKind::Examples, "t").unwrap_err() {
            DatasetError::Schema { path, .. } => assert_eq!(path, "table.rows[0][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = format!("{MINIMAL}\n{MINIMAL}\n");
        match parse_dataset(text.as_bytes(), DatasetKind::Examples, "t").unwrap_err() {
            DatasetError::DuplicateId { line, id } => {
                assert_eq!((line, id.as_str()), (2, "x1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_serializes_to_nothing() {
        let ds = Dataset::examples("e", vec![]);
        assert!(serialize_dataset(&ds).is_empty());
    }

    #[test]
    fn serialization_is_stable_and_reparses() {
        let ds = parse_dataset(MINIMAL.as_bytes(), DatasetKind::Examples, "t").unwrap();
        let a = serialize_dataset(&ds);
        let b = serialize_dataset(&ds);
        assert_eq!(a, b);
        assert_eq!(String::from_utf8(a.clone()).unwrap(), format!("{MINIMAL}\n"));
        let again = parse_dataset(&a[..], DatasetKind::Examples, "t").unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn corpus_accepts_examples_and_bare_tables() {
        let text = format!("{MINIMAL}\n{{\"header\":[\"B\",\"C\"],\"rows\":[]}}\n");
        let tables = parse_table_corpus(text.as_bytes()).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[1].header, vec!["B", "C"]);
    }
}
