//! Exact-match scoring and robustness accuracies.

mod report;

pub use report::{
    build_report, merge_reports, r_acc_within_bound, render_merged, Format, MergeError,
    MergedReport, ReportError, ReportOptions, ReportRow, RobustnessReport, DevRow,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::adapters::{PredictionSet, Side};
use crate::exec::Execution;
use crate::model::{PerturbedPair, QaExample};

/// Relative tolerance for numeric answer comparison.
pub const NUMERIC_REL_TOL: f64 = 1e-6;

const QUOTE_PAIRS: [(char, char); 5] = [
    ('"', '"'),
    ('\'', '\''),
    ('“', '”'),
    ('‘', '’'),
    ('`', '`'),
];

fn strip_quotes(mut s: &str) -> &str {
    loop {
        let mut chars = s.chars();
        let (Some(first), Some(last)) = (chars.next(), chars.next_back()) else {
            return s;
        };
        if QUOTE_PAIRS.iter().any(|&(l, r)| l == first && r == last) {
            s = s[first.len_utf8()..s.len() - last.len_utf8()].trim();
        } else {
            return s;
        }
    }
}

/// Drops commas that separate three-digit groups ("12,345" → "12345").
fn drop_group_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1..i + 4).is_some_and(|g| g.iter().all(char::is_ascii_digit))
            && !chars.get(i + 4).is_some_and(char::is_ascii_digit)
        {
            continue;
        }
        out.push(c);
    }
    out
}

/// Parses plain decimal literals only (no exponents, no `inf`/`nan`), with at
/// most 15 integer digits so the f64 round trip is exact.
fn parse_plain_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    if body.is_empty() {
        return None;
    }
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits_ok = |p: &str| p.chars().all(|c| c.is_ascii_digit());
    if !digits_ok(int) || !frac.is_none_or(digits_ok) {
        return None;
    }
    if int.is_empty() && frac.is_none_or(str::is_empty) {
        return None;
    }
    if int.trim_start_matches('0').len() > 15 {
        return None;
    }
    s.parse::<f64>().ok()
}

fn canonical_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Trim, lowercase, collapse whitespace, strip surrounding quotes, drop
/// thousands separators, and print numbers in shortest decimal form.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.trim().to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let unquoted = strip_quotes(&collapsed);
    let ungrouped = drop_group_commas(unquoted);
    match parse_plain_number(&ungrouped) {
        Some(v) => canonical_number(v),
        None => ungrouped,
    }
}

fn items_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (parse_plain_number(a), parse_plain_number(b)) {
        (Some(x), Some(y)) => (x - y).abs() <= NUMERIC_REL_TOL * x.abs().max(y.abs()),
        _ => false,
    }
}

/// Perfect matching between two equally long lists under [`items_match`]
/// (augmenting paths; lists are tiny).
fn multiset_match(pred: &[String], gold: &[String]) -> bool {
    if pred.len() != gold.len() {
        return false;
    }
    let p: Vec<String> = pred.iter().map(|s| normalize_answer(s)).collect();
    let g: Vec<String> = gold.iter().map(|s| normalize_answer(s)).collect();
    let n = p.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| items_match(&g[i], &p[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];

    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }

    (0..n).all(|u| {
        let mut seen = vec![false; n];
        augment(u, &adj, &mut seen, &mut owner)
    })
}

/// True iff the normalized multisets of `pred` and `gold` are equal. Gold
/// must be non-empty; an empty gold list never matches.
pub fn exact_match(pred: &[String], gold: &[String]) -> bool {
    !gold.is_empty() && multiset_match(pred, gold)
}

/// Equality of two model outputs; unlike [`exact_match`], two empty
/// predictions agree.
pub fn predictions_agree(a: &[String], b: &[String]) -> bool {
    multiset_match(a, b)
}

/// Exact-match tally over one side of a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// Examples without a prediction; counted as incorrect.
    pub missing: usize,
}

impl Accuracy {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

pub fn accuracy(preds: &PredictionSet, examples: &[QaExample], side: Side) -> Accuracy {
    let mut acc = Accuracy::default();
    for ex in examples {
        acc.total += 1;
        match preds.get(&ex.id, side) {
            Some(p) => {
                if exact_match(p, &ex.answers) {
                    acc.correct += 1;
                }
            }
            None => acc.missing += 1,
        }
    }
    acc
}

/// Per-pair correctness on each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub id: String,
    pub pre_correct: bool,
    pub post_correct: bool,
}

/// Scores every pair; missing predictions count as incorrect. Returns the
/// scores and the number of missing (pre, post) predictions.
pub fn score_pairs(
    pairs: &[PerturbedPair],
    preds: &PredictionSet,
    exec: Execution,
) -> (Vec<ScoredPair>, usize, usize) {
    let scored = exec.map(pairs, |p| {
        let pre = preds.get(&p.id, Side::Pre);
        let post = preds.get(&p.id, Side::Post);
        (
            ScoredPair {
                id: p.id.clone(),
                pre_correct: pre.is_some_and(|x| exact_match(x, &p.pre.answers)),
                post_correct: post.is_some_and(|x| exact_match(x, &p.post.answers)),
            },
            pre.is_none(),
            post.is_none(),
        )
    });
    let missing_pre = scored.iter().filter(|s| s.1).count();
    let missing_post = scored.iter().filter(|s| s.2).count();
    (scored.into_iter().map(|s| s.0).collect(), missing_pre, missing_post)
}

/// Streaming counters behind Pre-, Post-, and Robustness Accuracy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RobustnessTally {
    pub n: usize,
    pub pre_correct: usize,
    pub post_correct: usize,
    pub both_correct: usize,
}

impl RobustnessTally {
    pub fn push(&mut self, s: &ScoredPair) {
        self.n += 1;
        self.pre_correct += usize::from(s.pre_correct);
        self.post_correct += usize::from(s.post_correct);
        self.both_correct += usize::from(s.pre_correct && s.post_correct);
    }

    pub fn merge(mut self, other: RobustnessTally) -> Self {
        self.n += other.n;
        self.pre_correct += other.pre_correct;
        self.post_correct += other.post_correct;
        self.both_correct += other.both_correct;
        self
    }

    pub fn pre_acc(&self) -> f64 {
        percent(self.pre_correct, self.n).unwrap_or(0.0)
    }

    pub fn post_acc(&self) -> f64 {
        percent(self.post_correct, self.n).unwrap_or(0.0)
    }

    /// `None` when nothing was correct before perturbation.
    pub fn r_acc(&self) -> Option<f64> {
        percent(self.both_correct, self.pre_correct)
    }
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// 100 × |pre ∧ post correct| / |pre correct|; `None` when undefined.
pub fn robustness_accuracy(scored: &[ScoredPair]) -> Option<f64> {
    let mut t = RobustnessTally::default();
    for s in scored {
        t.push(s);
    }
    t.r_acc()
}

/// One question's correctness plus the sequence it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceScore {
    pub sequence_id: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("scored item {index} has no sequence_id")]
    MissingSequence { index: usize },
}

/// Mean over sequences of the fraction of each sequence's questions that are
/// correct, as a percentage. Sequences are averaged in first-seen order.
pub fn sqa_sequence_accuracy(items: &[SequenceScore]) -> Result<f64, MetricsError> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (index, item) in items.iter().enumerate() {
        let sid = item
            .sequence_id
            .as_deref()
            .ok_or(MetricsError::MissingSequence { index })?;
        let k = *slot.entry(sid).or_insert_with(|| {
            order.push((0, 0));
            order.len() - 1
        });
        order[k].0 += usize::from(item.correct);
        order[k].1 += 1;
    }
    if order.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = order.iter().map(|&(c, n)| c as f64 / n as f64).sum();
    Ok(100.0 * sum / order.len() as f64)
}
