use serde::{Deserialize, Serialize};

use crate::model::Table;

pub const DEFAULT_DELIMITERS: [&str; 3] = ["–", "-", "/"];

/// One compound column replaced by its two parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSplit {
    /// Index of the source column in the input table.
    pub column: usize,
    pub name: String,
    pub delimiter: String,
    pub names: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRejection {
    pub column: usize,
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub table: Table,
    pub splits: Vec<ColumnSplit>,
    pub rejected: Vec<ColumnRejection>,
}

impl ExtensionReport {
    pub fn changed(&self) -> bool {
        !self.splits.is_empty()
    }
}

fn split_two<'a>(cell: &'a str, delim: &str) -> Option<(&'a str, &'a str)> {
    let mut parts = cell.split(delim);
    let a = parts.next()?.trim();
    let b = parts.next()?.trim();
    if parts.next().is_some() || a.is_empty() || b.is_empty() {
        return None;
    }
    Some((a, b))
}

fn consistent_delimiter<'d>(table: &Table, j: usize, delimiters: &[&'d str]) -> Result<&'d str, String> {
    let values: Vec<&str> = table.column(j).map(str::trim).filter(|c| !c.is_empty()).collect();
    if values.is_empty() {
        return Err("no values".into());
    }
    delimiters
        .iter()
        .copied()
        .find(|d| values.iter().all(|v| split_two(v, d).is_some()))
        .ok_or_else(|| "cells do not all split into two parts on one delimiter".into())
}

/// Splits every column whose non-empty cells all split into exactly two
/// non-empty parts on the same delimiter. Columns listed in `protected` are
/// left alone.
pub fn rta_column_extension_with(table: &Table, delimiters: &[&str], protected: &[usize]) -> ExtensionReport {
    let mut splits = Vec::new();
    let mut rejected = Vec::new();
    let taken = |names: &[String], own: usize, candidate: &str| {
        let c = candidate.trim().to_lowercase();
        names
            .iter()
            .enumerate()
            .any(|(k, n)| k != own && n.trim().to_lowercase() == c)
    };
    for j in 0..table.width() {
        let name = table.header[j].clone();
        let reject = |reason: &str| ColumnRejection {
            column: j,
            name: name.clone(),
            reason: reason.to_string(),
        };
        if protected.contains(&j) {
            rejected.push(reject("protected column"));
            continue;
        }
        let delim = match consistent_delimiter(table, j, delimiters) {
            Ok(d) => d,
            Err(reason) => {
                rejected.push(reject(&reason));
                continue;
            }
        };
        let from_header = delimiters
            .iter()
            .find_map(|d| split_two(&name, d))
            .map(|(a, b)| [a.to_string(), b.to_string()]);
        let numbered = [format!("{} (1)", name.trim()), format!("{} (2)", name.trim())];
        let free = |pair: &[String; 2]| {
            !taken(&table.header, j, &pair[0])
                && !taken(&table.header, j, &pair[1])
                && pair[0].trim().to_lowercase() != pair[1].trim().to_lowercase()
        };
        let names = match from_header.filter(|p| free(p)) {
            Some(p) => p,
            None if free(&numbered) => numbered,
            None => {
                rejected.push(reject("new column names collide"));
                continue;
            }
        };
        splits.push(ColumnSplit {
            column: j,
            name: name.clone(),
            delimiter: delim.to_string(),
            names,
        });
    }
    let mut out = table.clone();
    for s in splits.iter().rev() {
        let (left, right): (Vec<String>, Vec<String>) = table
            .column(s.column)
            .map(|c| match split_two(c.trim(), &s.delimiter) {
                Some((a, b)) => (a.to_string(), b.to_string()),
                None => (String::new(), String::new()),
            })
            .unzip();
        out.remove_column(s.column);
        out.insert_column(s.column, s.names[1].clone(), right);
        out.insert_column(s.column, s.names[0].clone(), left);
    }
    ExtensionReport {
        table: out,
        splits,
        rejected,
    }
}

pub fn rta_column_extension(table: &Table, delimiters: &[&str]) -> ExtensionReport {
    rta_column_extension_with(table, delimiters, &[])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceKind {
    Duplicate,
    RankAscending,
    RankDescending,
}

/// A column whose values follow from another column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferableColumn {
    pub column: usize,
    pub source: usize,
    pub kind: InferenceKind,
}

fn cell_number(s: &str) -> Option<f64> {
    let t: String = s.trim().chars().filter(|&c| c != ',').collect();
    let ok = !t.is_empty()
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+'))
        && t.chars().any(|c| c.is_ascii_digit());
    if ok {
        t.parse().ok()
    } else {
        None
    }
}

fn dense_ranks(values: &[f64], descending: bool) -> Vec<u64> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    distinct.dedup();
    if descending {
        distinct.reverse();
    }
    values
        .iter()
        .map(|v| distinct.iter().position(|d| d == v).expect("present") as u64 + 1)
        .collect()
}

/// Columns that duplicate an earlier column or hold the dense rank of a
/// numeric column. Needs at least two rows.
pub fn detect_inferable_columns(table: &Table) -> Vec<InferableColumn> {
    if table.height() < 2 {
        return Vec::new();
    }
    let cols: Vec<Vec<&str>> = (0..table.width())
        .map(|j| table.column(j).map(str::trim).collect())
        .collect();
    let numeric: Vec<Option<Vec<f64>>> = cols
        .iter()
        .map(|c| c.iter().map(|v| cell_number(v)).collect::<Option<Vec<f64>>>())
        .collect();
    let mut out = Vec::new();
    for j in 0..cols.len() {
        if let Some(i) = (0..j).find(|&i| cols[i] == cols[j]) {
            out.push(InferableColumn {
                column: j,
                source: i,
                kind: InferenceKind::Duplicate,
            });
            continue;
        }
        let ranks: Option<Vec<u64>> = cols[j].iter().map(|v| v.parse::<u64>().ok()).collect();
        let Some(ranks) = ranks else { continue };
        let found = (0..cols.len()).filter(|&i| i != j).find_map(|i| {
            let vals = numeric[i].as_ref()?;
            let mut d = vals.clone();
            d.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            d.dedup();
            if d.len() < 2 || cols[i] == cols[j] {
                return None;
            }
            if dense_ranks(vals, true) == ranks {
                Some((i, InferenceKind::RankDescending))
            } else if dense_ranks(vals, false) == ranks {
                Some((i, InferenceKind::RankAscending))
            } else {
                None
            }
        });
        if let Some((source, kind)) = found {
            out.push(InferableColumn { column: j, source, kind });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("column {index} out of range for width {width}")]
    OutOfRange { index: usize, width: usize },
    #[error("cannot mask the last remaining column")]
    LastColumn,
}

pub fn mask_column(table: &Table, index: usize) -> Result<Table, MaskError> {
    if index >= table.width() {
        return Err(MaskError::OutOfRange {
            index,
            width: table.width(),
        });
    }
    if table.width() < 2 {
        return Err(MaskError::LastColumn);
    }
    let mut out = table.clone();
    out.remove_column(index);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_column_splits() {
        let t = Table::new(["Team", "Score"], [["A", "3–2"], ["B", "1–1"]]);
        let r = rta_column_extension(&t, &DEFAULT_DELIMITERS);
        assert_eq!(r.table.header, ["Team", "Score (1)", "Score (2)"]);
        assert_eq!(r.table.rows[0], ["A", "3", "2"]);
        assert_eq!(r.table.rows[1], ["B", "1", "1"]);
        assert_eq!(r.rejected[0].name, "Team");
    }

    #[test]
    fn inconsistent_column_is_kept() {
        let t = Table::new(["Score"], [["3–2"], ["draw"]]);
        let r = rta_column_extension(&t, &DEFAULT_DELIMITERS);
        assert!(!r.changed());
        assert_eq!(r.table, t);
    }

    #[test]
    fn compound_header_names_the_parts() {
        let t = Table::new(["Home/Away"], [["3/2"]]);
        let r = rta_column_extension(&t, &DEFAULT_DELIMITERS);
        assert_eq!(r.table.header, ["Home", "Away"]);
    }

    #[test]
    fn rank_of_total_points_is_flagged() {
        let t = Table::new(
            ["Team", "Total Points", "Ranking"],
            [["A", "40", "2"], ["B", "55", "1"], ["C", "12", "3"]],
        );
        let found = detect_inferable_columns(&t);
        assert_eq!(
            found,
            vec![InferableColumn {
                column: 2,
                source: 1,
                kind: InferenceKind::RankDescending
            }]
        );
    }

    #[test]
    fn unrelated_and_duplicate_columns() {
        let t = Table::new(["A", "B"], [["x", "p"], ["y", "q"]]);
        assert!(detect_inferable_columns(&t).is_empty());
        let d = Table::new(["A", "B"], [["x", "x"], ["y", "y"]]);
        assert_eq!(detect_inferable_columns(&d)[0].kind, InferenceKind::Duplicate);
    }

    #[test]
    fn masking() {
        let t = Table::new(["A", "B"], [["1", "2"]]);
        assert_eq!(mask_column(&t, 1).unwrap().header, ["A"]);
        let w3 = Table::new(["A", "B", "C"], [["1", "2", "3"]]);
        assert_eq!(
            mask_column(&w3, 5).unwrap_err(),
            MaskError::OutOfRange { index: 5, width: 3 }
        );
        let one = Table::new(["A"], [["1"]]);
        assert_eq!(mask_column(&one, 0).unwrap_err(), MaskError::LastColumn);
    }
}
