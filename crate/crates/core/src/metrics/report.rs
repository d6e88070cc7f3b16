use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    accuracy, exact_match, score_pairs, sqa_sequence_accuracy, MetricsError, RobustnessTally,
    SequenceScore,
};
use crate::adapters::{PredictionSet, Side};
use crate::exec::Execution;
use crate::model::{PerturbationType, PerturbedPair, QaExample};

/// Placeholder for undefined or not-applicable cells.
const UNDEFINED: &str = "—";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "type")]
    pub perturbation: String,
    pub n: usize,
    pub pre_acc: f64,
    pub post_acc: f64,
    pub drop: f64,
    pub r_acc: Option<f64>,
    pub missing_pre: usize,
    pub missing_post: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevRow {
    pub n: usize,
    pub acc: f64,
    pub missing: usize,
}

/// Pre/Post/R-Acc per perturbation type for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub model: String,
    #[serde(default)]
    pub sequence_averaged: bool,
    pub dev: Option<DevRow>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Average pre/post accuracy per question sequence (SQA style).
    pub sequence_averaging: bool,
    pub exec: Execution,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{perturbation}: {source}")]
    Sequence {
        perturbation: String,
        source: MetricsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

fn side_sequence_accuracy(
    perturbation: &str,
    pairs: &[&PerturbedPair],
    preds: &PredictionSet,
    side: Side,
) -> Result<f64, ReportError> {
    let items: Vec<SequenceScore> = pairs
        .iter()
        .map(|p| {
            let ex = match side {
                Side::Pre => &p.pre,
                Side::Post => &p.post,
            };
            SequenceScore {
                sequence_id: ex.sequence_id.clone(),
                correct: preds.get(&p.id, side).is_some_and(|a| exact_match(a, &ex.answers)),
            }
        })
        .collect();
    sqa_sequence_accuracy(&items).map_err(|source| ReportError::Sequence {
        perturbation: perturbation.to_string(),
        source,
    })
}

/// Groups pairs by perturbation type (canonical type order) and scores each
/// group. Missing predictions count as incorrect and are tallied per row.
pub fn build_report(
    model: &str,
    pairs: &[PerturbedPair],
    preds: &PredictionSet,
    dev: Option<(&[QaExample], &PredictionSet)>,
    opts: ReportOptions,
) -> Result<RobustnessReport, ReportError> {
    let mut groups: BTreeMap<PerturbationType, Vec<&PerturbedPair>> = BTreeMap::new();
    for p in pairs {
        groups.entry(p.perturbation.kind).or_default().push(p);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (kind, group) in groups {
        let owned: Vec<PerturbedPair> = group.iter().map(|p| (*p).clone()).collect();
        let (scored, missing_pre, missing_post) = score_pairs(&owned, preds, opts.exec);
        let mut tally = RobustnessTally::default();
        for s in &scored {
            tally.push(s);
        }
        let (pre_acc, post_acc) = if opts.sequence_averaging {
            (
                side_sequence_accuracy(kind.as_str(), &group, preds, Side::Pre)?,
                side_sequence_accuracy(kind.as_str(), &group, preds, Side::Post)?,
            )
        } else {
            (tally.pre_acc(), tally.post_acc())
        };
        rows.push(ReportRow {
            perturbation: kind.as_str().to_string(),
            n: tally.n,
            pre_acc,
            post_acc,
            drop: pre_acc - post_acc,
            r_acc: tally.r_acc(),
            missing_pre,
            missing_post,
        });
    }
    let dev = match dev {
        None => None,
        Some((examples, dev_preds)) => {
            let acc = accuracy(dev_preds, examples, Side::Pre);
            let value = if opts.sequence_averaging {
                let items: Vec<SequenceScore> = examples
                    .iter()
                    .map(|ex| SequenceScore {
                        sequence_id: ex.sequence_id.clone(),
                        correct: dev_preds
                            .get(&ex.id, Side::Pre)
                            .is_some_and(|a| exact_match(a, &ex.answers)),
                    })
                    .collect();
                sqa_sequence_accuracy(&items).map_err(|source| ReportError::Sequence {
                    perturbation: "development_set".into(),
                    source,
                })?
            } else {
                acc.percent()
            };
            Some(DevRow {
                n: acc.total,
                acc: value,
                missing: acc.missing,
            })
        }
    };
    Ok(RobustnessReport {
        model: model.to_string(),
        sequence_averaged: opts.sequence_averaging,
        dev,
        rows,
    })
}

/// R-Acc can never exceed 100 × Post/Pre, since both-correct is a subset of
/// post-correct. `slack` absorbs rounding of published one-decimal values.
pub fn r_acc_within_bound(pre: f64, post: f64, r_acc: f64, slack: f64) -> bool {
    if pre <= 0.0 {
        return true;
    }
    (0.0..=100.0 + slack).contains(&r_acc) && r_acc <= 100.0 * post / pre + slack
}

fn fmt1(v: f64) -> String {
    format!("{v:.1}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt1).unwrap_or_else(|| UNDEFINED.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl RobustnessReport {
    /// Rows with predictions missing on either side.
    pub fn coverage_gaps(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(dev) = &self.dev {
            if dev.missing > 0 {
                out.push(format!("development_set: {} missing predictions", dev.missing));
            }
        }
        for r in &self.rows {
            if r.missing_pre > 0 || r.missing_post > 0 {
                out.push(format!(
                    "{}: {} missing pre, {} missing post",
                    r.perturbation, r.missing_pre, r.missing_post
                ));
            }
        }
        out
    }

    /// Checks range and the R-Acc ≤ 100 × Post/Pre bound on every row.
    pub fn check_consistency(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (name, v) in [("pre_acc", r.pre_acc), ("post_acc", r.post_acc)] {
                if !(0.0..=100.0).contains(&v) {
                    out.push(format!("{}: {name} {v} out of range", r.perturbation));
                }
            }
            if let Some(ra) = r.r_acc {
                let bounded = self.sequence_averaged
                    || r_acc_within_bound(r.pre_acc, r.post_acc, ra, 1e-9);
                if !(0.0..=100.0).contains(&ra) || !bounded {
                    out.push(format!(
                        "{}: r_acc {ra:.3} violates bound (pre {:.3}, post {:.3})",
                        r.perturbation, r.pre_acc, r.post_acc
                    ));
                }
            }
        }
        out
    }

    fn table_rows(&self) -> Vec<[String; 6]> {
        let mut out = Vec::new();
        if let Some(d) = &self.dev {
            out.push([
                "development_set".to_string(),
                d.n.to_string(),
                fmt1(d.acc),
                UNDEFINED.into(),
                UNDEFINED.into(),
                UNDEFINED.into(),
            ]);
        }
        for r in &self.rows {
            out.push([
                r.perturbation.clone(),
                r.n.to_string(),
                fmt1(r.pre_acc),
                fmt1(r.post_acc),
                fmt1(r.drop),
                fmt_opt(r.r_acc),
            ]);
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        const COLUMNS: [&str; 6] = ["type", "n", "pre_acc", "post_acc", "drop", "r_acc"];
        let mut s = String::new();
        match format {
            Format::Markdown => {
                let _ = writeln!(s, "### {}", self.model);
                s.push('\n');
                let _ = writeln!(s, "| {} |", COLUMNS.join(" | "));
                s.push_str("|---|---:|---:|---:|---:|---:|\n");
                for row in self.table_rows() {
                    let _ = writeln!(s, "| {} |", row.join(" | "));
                }
            }
            Format::Csv => {
                s.push_str(&COLUMNS.join(","));
                s.push_str("\r\n");
                for row in self.table_rows() {
                    let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
                    s.push_str(&fields.join(","));
                    s.push_str("\r\n");
                }
            }
            Format::Json => {
                s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("no reports to merge")]
    Empty,
    #[error(
        "report `{model}` has a different set of perturbation types: missing [{}], extra [{}]",
        missing.join(", "),
        extra.join(", ")
    )]
    MismatchedTypes {
        model: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
}

/// Several models side by side: rows are perturbation types, columns models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedReport {
    pub models: Vec<String>,
    pub dev: Vec<Option<f64>>,
    pub types: Vec<String>,
    pub n: Vec<usize>,
    /// `cells[type][model]`
    pub cells: Vec<Vec<ReportRow>>,
}

pub fn merge_reports(reports: &[RobustnessReport]) -> Result<MergedReport, MergeError> {
    let first = reports.first().ok_or(MergeError::Empty)?;
    let types: Vec<String> = first.rows.iter().map(|r| r.perturbation.clone()).collect();
    for rep in &reports[1..] {
        let theirs: Vec<String> = rep.rows.iter().map(|r| r.perturbation.clone()).collect();
        let missing: Vec<String> = types.iter().filter(|t| !theirs.contains(t)).cloned().collect();
        let extra: Vec<String> = theirs.iter().filter(|t| !types.contains(t)).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(MergeError::MismatchedTypes {
                model: rep.model.clone(),
                missing,
                extra,
            });
        }
    }
    let cells = types
        .iter()
        .map(|t| {
            reports
                .iter()
                .map(|rep| {
                    rep.rows
                        .iter()
                        .find(|r| &r.perturbation == t)
                        .cloned()
                        .expect("type sets checked")
                })
                .collect()
        })
        .collect();
    Ok(MergedReport {
        models: reports.iter().map(|r| r.model.clone()).collect(),
        dev: reports.iter().map(|r| r.dev.as_ref().map(|d| d.acc)).collect(),
        n: first.rows.iter().map(|r| r.n).collect(),
        types,
        cells,
    })
}

/// Markdown cells read `pre / post (r_acc)`; CSV is long form with one line
/// per (type, model).
pub fn render_merged(m: &MergedReport, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Markdown => {
            let _ = writeln!(s, "| type | n | {} |", m.models.join(" | "));
            let _ = writeln!(s, "|---|---:|{}", "---:|".repeat(m.models.len()));
            if m.dev.iter().any(Option::is_some) {
                let devs: Vec<String> = m.dev.iter().map(|d| fmt_opt(*d)).collect();
                let _ = writeln!(s, "| development_set | {UNDEFINED} | {} |", devs.join(" | "));
            }
            for (i, t) in m.types.iter().enumerate() {
                let cells: Vec<String> = m.cells[i]
                    .iter()
                    .map(|r| format!("{} / {} ({})", fmt1(r.pre_acc), fmt1(r.post_acc), fmt_opt(r.r_acc)))
                    .collect();
                let _ = writeln!(s, "| {t} | {} | {} |", m.n[i], cells.join(" | "));
            }
        }
        Format::Csv => {
            s.push_str("type,model,n,pre_acc,post_acc,drop,r_acc\r\n");
            for (i, t) in m.types.iter().enumerate() {
                for (model, r) in m.models.iter().zip(&m.cells[i]) {
                    let _ = write!(
                        s,
                        "{},{},{},{},{},{},{}\r\n",
                        csv_field(t),
                        csv_field(model),
                        r.n,
                        fmt1(r.pre_acc),
                        fmt1(r.post_acc),
                        fmt1(r.drop),
                        fmt_opt(r.r_acc)
                    );
                }
            }
        }
        Format::Json => {
            s = serde_json::to_string_pretty(m).expect("merged report serializes");
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PerturbationSpec, Provenance, Table};

    fn pair(id: &str, kind: PerturbationType) -> PerturbedPair {
        let ex = QaExample::new(id, Table::new(["A"], [["x"]]), "q", vec!["x".into()]);
        PerturbedPair {
            id: id.into(),
            perturbation: PerturbationSpec::new(kind, 0),
            provenance: Provenance::Heuristic,
            pre: ex.clone(),
            post: ex,
        }
    }

    fn preds(entries: &[(&str, Side, &str)]) -> PredictionSet {
        let mut p = PredictionSet::default();
        for &(id, side, a) in entries {
            p.insert(id, side, vec![a.to_string()]).unwrap();
        }
        p
    }

    #[test]
    fn rows_follow_canonical_type_order() {
        let pairs = vec![
            pair("a", PerturbationType::NlqWord),
            pair("b", PerturbationType::RowShuffle),
        ];
        let p = preds(&[
            ("a", Side::Pre, "x"),
            ("a", Side::Post, "y"),
            ("b", Side::Pre, "x"),
            ("b", Side::Post, "x"),
        ]);
        let rep = build_report("m", &pairs, &p, None, ReportOptions::default()).unwrap();
        let types: Vec<&str> = rep.rows.iter().map(|r| r.perturbation.as_str()).collect();
        assert_eq!(types, ["row_shuffle", "nlq_word"]);
        assert_eq!(rep.rows[1].r_acc, Some(0.0));
        assert_eq!(rep.rows[1].drop, 100.0);
        assert!(rep.check_consistency().is_empty());
        assert!(rep.coverage_gaps().is_empty());
    }

    #[test]
    fn missing_predictions_surface_as_gaps() {
        let pairs = vec![pair("a", PerturbationType::ColShuffle)];
        let p = preds(&[("a", Side::Pre, "x")]);
        let rep = build_report("m", &pairs, &p, None, ReportOptions::default()).unwrap();
        assert_eq!(rep.rows[0].missing_post, 1);
        assert_eq!(rep.coverage_gaps().len(), 1);
    }

    #[test]
    fn undefined_r_acc_renders_as_dash() {
        let pairs = vec![pair("a", PerturbationType::ColShuffle)];
        let p = preds(&[("a", Side::Pre, "no"), ("a", Side::Post, "no")]);
        let rep = build_report("m", &pairs, &p, None, ReportOptions::default()).unwrap();
        let md = rep.render(Format::Markdown);
        assert!(md.contains("| col_shuffle | 1 | 0.0 | 0.0 | 0.0 | — |"), "{md}");
        let csv = rep.render(Format::Csv);
        assert_eq!(csv, "type,n,pre_acc,post_acc,drop,r_acc\r\ncol_shuffle,1,0.0,0.0,0.0,—\r\n");
        assert_eq!(rep.render(Format::Csv), csv);
    }

    #[test]
    fn published_tapex_row_shuffle_cell_is_consistent() {
        assert!(r_acc_within_bound(56.9, 45.7, 71.7, 0.15));
        assert_eq!(format!("{:.1}", 100.0 * 45.7 / 56.9), "80.3");
        assert!(!r_acc_within_bound(50.0, 25.0, 60.0, 0.15));
    }

    #[test]
    fn merge_requires_identical_type_sets() {
        let mk = |model: &str, kinds: &[PerturbationType]| {
            let pairs: Vec<PerturbedPair> =
                kinds.iter().enumerate().map(|(i, k)| pair(&i.to_string(), *k)).collect();
            let mut rep =
                build_report(model, &pairs, &PredictionSet::default(), None, ReportOptions::default())
                    .unwrap();
            rep.model = model.into();
            rep
        };
        let a = mk("A", &[PerturbationType::RowShuffle, PerturbationType::NlqWord]);
        let b = mk("B", &[PerturbationType::RowShuffle, PerturbationType::NlqWord]);
        let m = merge_reports(&[a.clone(), b]).unwrap();
        assert_eq!(m.models, ["A", "B"]);
        let md = render_merged(&m, Format::Markdown);
        assert!(md.starts_with("| type | n | A | B |"));

        let c = mk("C", &[PerturbationType::RowShuffle, PerturbationType::Mix]);
        match merge_reports(&[a, c]).unwrap_err() {
            MergeError::MismatchedTypes { model, missing, extra } => {
                assert_eq!(model, "C");
                assert_eq!(missing, ["nlq_word"]);
                assert_eq!(extra, ["mix"]);
            }
            other => panic!("{other:?}"),
        }
    }
}
