//! Heuristic candidate checks.
//!
//! Paraphrases are screened in a fixed order, and the first failing check
//! names the rejection: unchanged, hallucination, change of meaning,
//! information missing, then mismatch with the requested category. Meaning
//! is approximated by what survives the rewrite: numbers, quoted strings,
//! capitalized entities, and header mentions.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::parse::{apply_candidate, Candidate};
use super::{ParaphraseCategory, Task};
use crate::model::{validate_table, QaExample, Table};
use crate::perturb::answers_lost;
use crate::rules::SynonymLexicon;
use crate::text::{is_stopword, normalize_question, word_spans};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    Unchanged,
    Hallucination { detail: String },
    ChangeOfMeaning { detail: String },
    InformationMissing { detail: String },
    PromptMismatch { detail: String },
    DuplicateHeader { detail: String },
    NotShorter { detail: String },
    InvalidTable { detail: String },
    AnswerLost { detail: String },
    UnknownColumn { detail: String },
}

impl Rejection {
    /// The error class, e.g. "information missing".
    pub fn class(&self) -> &'static str {
        match self {
            Rejection::Unchanged => "unchanged",
            Rejection::Hallucination { .. } => "hallucination",
            Rejection::ChangeOfMeaning { .. } => "change of meaning",
            Rejection::InformationMissing { .. } => "information missing",
            Rejection::PromptMismatch { .. } => "mismatch with prompt",
            Rejection::DuplicateHeader { .. } => "duplicate header",
            Rejection::NotShorter { .. } => "not shorter",
            Rejection::InvalidTable { .. } => "invalid table",
            Rejection::AnswerLost { .. } => "answer lost",
            Rejection::UnknownColumn { .. } => "unknown column",
        }
    }

    fn detail(&self) -> Option<&str> {
        match self {
            Rejection::Unchanged => None,
            Rejection::Hallucination { detail }
            | Rejection::ChangeOfMeaning { detail }
            | Rejection::InformationMissing { detail }
            | Rejection::PromptMismatch { detail }
            | Rejection::DuplicateHeader { detail }
            | Rejection::NotShorter { detail }
            | Rejection::InvalidTable { detail }
            | Rejection::AnswerLost { detail }
            | Rejection::UnknownColumn { detail } => Some(detail),
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.detail() {
            Some(d) => write!(f, "{}: {d}", self.class()),
            None => f.write_str(self.class()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The post example the candidate produces.
    Accept(Box<QaExample>),
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept(_))
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Reject(r) => Some(r),
            Verdict::Accept(_) => None,
        }
    }
}

/// Checks `candidate` against `original`. `candidate_table` is needed for
/// column adding; `seed` fixes where added columns go.
pub fn validate_candidate(
    task: Task,
    original: &QaExample,
    candidate: &Candidate,
    candidate_table: Option<&Table>,
    seed: u64,
) -> Verdict {
    let checked = match (task, candidate) {
        (Task::Paraphrase(cat), Candidate::Paraphrase { question }) => {
            check_paraphrase(cat, &original.question, question, Some(&original.table))
        }
        (Task::HeaderSynonym | Task::HeaderAbbrev, Candidate::Header { names, .. }) => {
            check_header(task, &original.table.header, names)
        }
        (Task::ColExtension, Candidate::Extension { column, cells, .. }) => {
            check_extension(&original.table, column, cells)
        }
        (Task::ColMasking | Task::ColAdding, _) => Ok(()),
        _ => Err(Rejection::InvalidTable {
            detail: format!("candidate does not fit task {task}"),
        }),
    };
    if let Err(r) = checked {
        return Verdict::Reject(r);
    }
    let post = match apply_candidate(original, candidate, candidate_table, seed) {
        Ok(p) => p,
        Err(r) => return Verdict::Reject(r),
    };
    if !matches!(task, Task::Paraphrase(_)) {
        if let Some(v) = validate_table(&post.table).into_iter().next() {
            return Verdict::Reject(Rejection::InvalidTable { detail: v });
        }
        if post.table == original.table {
            return Verdict::Reject(Rejection::Unchanged);
        }
        if answers_lost(original, &post.table) {
            return Verdict::Reject(Rejection::AnswerLost {
                detail: original.answers.join(" | "),
            });
        }
    }
    Verdict::Accept(Box::new(post))
}

fn check_header(task: Task, old: &[String], new: &[String]) -> Result<(), Rejection> {
    let mut seen = BTreeSet::new();
    for n in new {
        if !seen.insert(n.trim().to_lowercase()) {
            return Err(Rejection::DuplicateHeader { detail: n.clone() });
        }
    }
    if old == new {
        return Err(Rejection::Unchanged);
    }
    if task == Task::HeaderAbbrev {
        for (o, n) in old.iter().zip(new) {
            if o != n && n.chars().count() >= o.chars().count() {
                return Err(Rejection::NotShorter {
                    detail: format!("{o} -> {n}"),
                });
            }
        }
    }
    Ok(())
}

/// Every split cell must occur inside the cell it came from.
fn check_extension(table: &Table, column: &str, cells: &[Vec<String>]) -> Result<(), Rejection> {
    let Some(j) = table.column_index(column) else {
        return Err(Rejection::UnknownColumn {
            detail: column.to_string(),
        });
    };
    for (row, parts) in table.rows.iter().zip(cells) {
        let src = row[j].to_lowercase();
        if let Some(p) = parts.iter().find(|p| !src.contains(&p.to_lowercase())) {
            return Err(Rejection::Hallucination {
                detail: format!("`{p}` is not part of `{}`", row[j]),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Paraphrase heuristics

const ORDINALS: &[&str] = &[
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth", "seventeenth",
    "eighteenth", "nineteenth", "twentieth", "twenty-first",
];

const CARDINALS: &[(&str, u64)] = &[
    ("two", 2), ("three", 3), ("four", 4), ("five", 5), ("six", 6), ("seven", 7), ("eight", 8),
    ("nine", 9), ("ten", 10), ("eleven", 11), ("twelve", 12), ("thirteen", 13), ("fourteen", 14),
    ("fifteen", 15), ("sixteen", 16), ("seventeen", 17), ("eighteen", 18), ("nineteen", 19),
    ("twenty", 20), ("thirty", 30), ("forty", 40), ("fifty", 50), ("hundred", 100),
    ("thousand", 1000), ("million", 1_000_000), ("billion", 1_000_000_000),
];

/// Ordinals whose everyday use ("first", "second place") is not a number
/// reference when the question already ranks things.
const LOOSE_ORDINALS: &[&str] = &["first"];

const ANTONYMS: &[(&str, &str)] = &[
    ("more", "less"), ("more", "fewer"), ("most", "least"), ("most", "fewest"),
    ("highest", "lowest"), ("largest", "smallest"), ("biggest", "smallest"), ("before", "after"),
    ("above", "below"), ("first", "last"), ("earliest", "latest"), ("maximum", "minimum"),
    ("won", "lost"), ("win", "lose"), ("wins", "losses"), ("increase", "decrease"),
    ("oldest", "youngest"), ("oldest", "newest"), ("longest", "shortest"), ("top", "bottom"),
    ("over", "under"), ("greater", "smaller"), ("higher", "lower"), ("best", "worst"),
    ("older", "younger"), ("longer", "shorter"), ("earlier", "later"),
];

const NEGATIONS: &[&str] = &["not", "no", "never", "none", "without"];

/// Words that signal the reasoning operation.
const REASONING_WORDS: &[&str] = &[
    "first", "last", "most", "least", "highest", "lowest", "largest", "smallest", "more", "less",
    "fewer", "total", "average", "difference", "before", "after", "above", "below", "earliest",
    "latest", "longest", "shortest", "top", "bottom", "maximum", "minimum", "greater", "greatest",
    "oldest", "youngest", "best", "worst", "higher", "lower", "biggest", "next", "previous",
    "same", "only", "count", "sum", "combined", "over", "under",
];

/// Multi-word carriers of the reasoning operation or the question form.
const CARRIERS: &[&str] = &[
    "how many", "how much", "how long", "how often", "what is the total", "what was the total",
    "total number of", "number of", "what is the difference", "what year", "which year",
    "in what year", "what are the names of", "what is the name of", "which", "who", "when",
    "where", "what",
];

const REQUEST_VERBS: &[&str] = &[
    "please", "list", "name", "give", "tell", "provide", "show", "identify", "find", "count",
    "state", "return", "report",
];

const QUESTION_STARTS: &[&str] = &[
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how", "is", "are", "was",
    "were", "did", "do", "does", "can", "could", "has", "have", "had", "in", "on", "at", "of",
    "for", "from", "after", "before", "during",
];

fn header_lexicon() -> &'static SynonymLexicon {
    static LEX: OnceLock<SynonymLexicon> = OnceLock::new();
    LEX.get_or_init(crate::resources::header_synonyms)
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d[\d,]*(?:\.\d+)?").expect("valid regex"))
}

fn quote_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).expect("valid regex"))
}

/// Lowercase, possessive and simple plural stripped.
fn stem(word: &str) -> String {
    let mut w = word.to_lowercase().replace('’', "'");
    if let Some(x) = w.strip_suffix("'s") {
        w = x.to_string();
    }
    if w.len() > 4 && w.ends_with("ies") {
        w.truncate(w.len() - 3);
        w.push('y');
    } else if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        w.pop();
    }
    w
}

fn stems(s: &str) -> BTreeSet<String> {
    word_spans(s).iter().map(|w| stem(w.text)).collect()
}

fn lower_words(s: &str) -> Vec<String> {
    word_spans(s).iter().map(|w| w.text.to_lowercase().replace('’', "'")).collect()
}

fn contains_phrase(words: &[String], phrase: &str) -> bool {
    let p: Vec<&str> = phrase.split_whitespace().collect();
    !p.is_empty() && words.windows(p.len()).any(|w| w.iter().zip(&p).all(|(a, b)| a == b))
}

fn numbers(s: &str) -> BTreeSet<String> {
    number_regex()
        .find_iter(s)
        .filter_map(|m| m.as_str().replace(',', "").parse::<f64>().ok())
        .map(|v| v.to_string())
        .collect()
}

fn quotes(s: &str) -> Vec<String> {
    quote_regex()
        .captures_iter(s)
        .filter_map(|c| c.get(1).or_else(|| c.get(2)))
        .map(|m| m.as_str().trim().to_string())
        .collect()
}

fn ordinal_value(w: &str) -> Option<u64> {
    ORDINALS.iter().position(|o| *o == w).map(|i| i as u64 + 1)
}

/// Values written as words, with ordinals that precede "century" tagged.
fn word_numbers(words: &[String]) -> Vec<(String, u64, bool)> {
    words
        .iter()
        .enumerate()
        .filter_map(|(i, w)| {
            let century = words.get(i + 1).is_some_and(|n| n == "century");
            if let Some(v) = ordinal_value(w) {
                return Some((w.clone(), v, century));
            }
            CARDINALS
                .iter()
                .find(|(c, _)| c == w)
                .map(|&(_, v)| (w.clone(), v, false))
        })
        .collect()
}

/// Centuries of the years mentioned, e.g. 1900 or "1900's" -> 20.
fn centuries(nums: &BTreeSet<String>) -> BTreeSet<u64> {
    nums.iter()
        .filter_map(|n| n.parse::<u64>().ok())
        .filter(|y| (1000..3000).contains(y))
        .map(|y| y / 100 + 1)
        .collect()
}

fn table_text(table: Option<&Table>) -> String {
    let Some(t) = table else { return String::new() };
    let mut s = t.header.join(" ; ");
    for row in &t.rows {
        s.push_str(" ; ");
        s.push_str(&row.join(" ; "));
    }
    s.to_lowercase()
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_uppercase())
        || (word.chars().any(|c| c.is_ascii_digit()) && word.chars().any(|c| c.is_uppercase()))
}

fn is_function_word(lower: &str) -> bool {
    is_stopword(lower)
        || REQUEST_VERBS.contains(&lower)
        || QUESTION_STARTS.contains(&lower)
        || matches!(lower, "i" | "please" | "tell" | "me" | "give")
}

/// Runs of adjacent capitalized words. A sentence-initial word joins a run
/// only when it is not a function word.
fn entity_runs(s: &str) -> Vec<Vec<String>> {
    let spans = word_spans(s);
    let mut runs: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    // a lone capitalized word opening a sentence is usually just a word
    let mut opened_sentence = false;
    let mut flush = |current: &mut Vec<String>, opened: bool| {
        if current.len() > 1 || (current.len() == 1 && !opened) {
            runs.push(std::mem::take(current));
        }
        current.clear();
    };
    let mut prev_end = 0;
    for (k, w) in spans.iter().enumerate() {
        let gap = &s[prev_end..w.start];
        let sentence_start = k == 0 || gap.contains(['.', '?', '!', ':']);
        let adjacent = k > 0 && gap.trim().is_empty();
        if !adjacent {
            flush(&mut current, opened_sentence);
        }
        let lower = w.text.to_lowercase();
        let counts = is_capitalized(w.text) && !(sentence_start && is_function_word(&lower)) && lower != "i";
        if counts {
            if current.is_empty() {
                opened_sentence = sentence_start;
            }
            current.push(w.text.to_string());
        } else {
            flush(&mut current, opened_sentence);
        }
        prev_end = w.end;
    }
    flush(&mut current, opened_sentence);
    runs
}

/// Header names whose content words all occur in `question`.
fn mentioned_headers(question: &str, table: Option<&Table>) -> Vec<String> {
    let Some(t) = table else { return Vec::new() };
    let q = stems(question);
    t.header
        .iter()
        .filter(|h| {
            let toks: Vec<String> = word_spans(h)
                .iter()
                .map(|w| stem(w.text))
                .filter(|w| !is_stopword(w))
                .collect();
            !toks.is_empty() && toks.iter().all(|w| q.contains(w))
        })
        .cloned()
        .collect()
}

fn phrase_covered(phrase: &str, para: &BTreeSet<String>) -> bool {
    let toks: Vec<String> = word_spans(phrase)
        .iter()
        .map(|w| stem(w.text))
        .filter(|w| !is_stopword(w))
        .collect();
    !toks.is_empty() && toks.iter().all(|w| para.contains(w))
}

fn header_kept(header: &str, para: &BTreeSet<String>) -> bool {
    phrase_covered(header, para)
        || header_lexicon()
            .get(&header.trim().to_lowercase())
            .is_some_and(|alts| alts.iter().any(|a| phrase_covered(a, para)))
}

/// True when `para` names a table cell that `original` does not.
fn introduces_cell(original: &str, para: &str, table: Option<&Table>) -> bool {
    let Some(t) = table else { return false };
    let q = lower_words(original);
    let p = lower_words(para);
    t.rows.iter().flatten().any(|c| {
        let cell = lower_words(c).join(" ");
        !cell.is_empty() && contains_phrase(&p, &cell) && !contains_phrase(&q, &cell)
    })
}

fn is_question_form(s: &str) -> bool {
    let t = s.trim();
    if t.ends_with('?') {
        return true;
    }
    let words = lower_words(t);
    words.first().is_some_and(|w| QUESTION_STARTS.contains(&w.as_str()) && !REQUEST_VERBS.contains(&w.as_str()))
}

/// Runs the paraphrase checks in order. `table` may be absent for
/// free-standing questions.
pub(crate) fn check_paraphrase(
    cat: ParaphraseCategory,
    original: &str,
    para: &str,
    table: Option<&Table>,
) -> Result<(), Rejection> {
    if normalize_question(original) == normalize_question(para) {
        return Err(Rejection::Unchanged);
    }
    let q_lower = original.to_lowercase();
    let p_lower = para.to_lowercase();
    let t_text = table_text(table);
    let q_words = lower_words(original);
    let p_words = lower_words(para);
    let p_stems = stems(para);
    let context_stems: BTreeSet<String> = stems(original).union(&stems(&t_text)).cloned().collect();
    let in_context = |s: &str| {
        let l = s.to_lowercase();
        q_lower.contains(&l) || t_text.contains(&l)
    };
    let run_in_context = |run: &[String]| {
        in_context(&run.join(" ")) || run.iter().all(|w| context_stems.contains(&stem(w)))
    };

    // Hallucination: new quoted strings or multiword entities.
    for q in quotes(para) {
        if !in_context(&q) {
            return Err(Rejection::Hallucination {
                detail: format!("\"{q}\" does not appear in the question or table"),
            });
        }
    }
    for run in entity_runs(para).into_iter().filter(|r| r.len() >= 2) {
        let phrase = run.join(" ");
        if !run_in_context(&run) {
            return Err(Rejection::Hallucination {
                detail: format!("`{phrase}` does not appear in the question or table"),
            });
        }
    }

    // Change of meaning: new numbers, unlicensed number words, antonym or
    // negation flips.
    let q_nums = numbers(original);
    let p_nums = numbers(para);
    let t_nums = numbers(&t_text);
    if let Some(n) = p_nums.iter().find(|n| !q_nums.contains(*n) && !t_nums.contains(*n)) {
        return Err(Rejection::ChangeOfMeaning {
            detail: format!("number {n} is new"),
        });
    }
    let q_word_nums = word_numbers(&q_words);
    let q_values: BTreeSet<u64> = q_nums
        .iter()
        .filter_map(|n| n.parse::<u64>().ok())
        .chain(q_word_nums.iter().map(|(_, v, _)| *v))
        .collect();
    let q_centuries = centuries(&q_nums);
    for (w, v, century) in word_numbers(&p_words) {
        if q_words.contains(&w) || LOOSE_ORDINALS.contains(&w.as_str()) {
            continue;
        }
        let licensed = if century {
            q_centuries.contains(&v)
        } else {
            q_values.contains(&v)
        };
        if !licensed {
            return Err(Rejection::ChangeOfMeaning {
                detail: format!("`{w}` does not match the original"),
            });
        }
    }
    // A question number swapped for another number from the table.
    if let Some(m) = p_nums.iter().find(|m| !q_nums.contains(*m)) {
        if let Some(n) = q_nums.iter().find(|n| !p_nums.contains(*n)) {
            return Err(Rejection::ChangeOfMeaning {
                detail: format!("number {n} became {m}"),
            });
        }
    }
    for &(a, b) in ANTONYMS {
        for (x, y) in [(a, b), (b, a)] {
            let qx = q_words.iter().any(|w| w == x);
            let qy = q_words.iter().any(|w| w == y);
            let px = p_words.iter().any(|w| w == x);
            let py = p_words.iter().any(|w| w == y);
            if qx && !qy && py && !px {
                return Err(Rejection::ChangeOfMeaning {
                    detail: format!("`{x}` became `{y}`"),
                });
            }
        }
    }
    let negations = |words: &[String]| {
        words
            .iter()
            .filter(|w| NEGATIONS.contains(&w.as_str()) || w.ends_with("n't"))
            .count()
    };
    if negations(&q_words) != negations(&p_words) {
        return Err(Rejection::ChangeOfMeaning {
            detail: "negation added or removed".into(),
        });
    }

    // Information missing: numbers, quotes, entities, and header mentions
    // of the original must survive.
    let p_word_values: BTreeSet<u64> = word_numbers(&p_words)
        .iter()
        .filter(|(_, _, c)| !c)
        .map(|(_, v, _)| *v)
        .collect();
    let p_centuries: BTreeSet<u64> = word_numbers(&p_words)
        .iter()
        .filter(|(_, _, c)| *c)
        .map(|(_, v, _)| *v)
        .collect();
    // A cell value reference may be swapped for the cell as written.
    let swapped_for_cell = cat == ParaphraseCategory::CellValueSynonym
        && introduces_cell(original, para, table);
    for n in q_nums.iter().filter(|_| !swapped_for_cell) {
        let as_int = n.parse::<u64>().ok();
        let kept = p_nums.contains(n)
            || as_int.is_some_and(|v| p_word_values.contains(&v))
            || as_int.is_some_and(|y| (1000..3000).contains(&y) && p_centuries.contains(&(y / 100 + 1)));
        if !kept {
            return Err(Rejection::InformationMissing {
                detail: format!("number {n} is missing"),
            });
        }
    }
    for q in quotes(original).into_iter().filter(|_| !swapped_for_cell) {
        if !p_lower.contains(&q.to_lowercase()) {
            return Err(Rejection::InformationMissing {
                detail: format!("\"{q}\" is missing"),
            });
        }
    }
    for run in entity_runs(original).into_iter().filter(|_| !swapped_for_cell) {
        for w in run {
            if !p_stems.contains(&stem(&w)) {
                return Err(Rejection::InformationMissing {
                    detail: format!("`{w}` is missing"),
                });
            }
        }
    }
    let mentioned = mentioned_headers(original, table);
    if !matches!(cat, ParaphraseCategory::HeaderSynonym | ParaphraseCategory::HeaderCarrier) {
        if let Some(h) = mentioned.iter().find(|h| !header_kept(h, &p_stems)) {
            return Err(Rejection::InformationMissing {
                detail: format!("`{h}` is no longer mentioned"),
            });
        }
    }

    // Mismatch with the requested category.
    let mismatch = |detail: &str| {
        Err(Rejection::PromptMismatch {
            detail: format!("{}: {detail}", cat.name()),
        })
    };
    match cat {
        ParaphraseCategory::ReasoningSynonym => {
            let present: Vec<&str> = REASONING_WORDS
                .iter()
                .copied()
                .filter(|w| q_words.iter().any(|q| q == w))
                .collect();
            if !present.is_empty() && present.iter().all(|w| p_words.iter().any(|p| p == w)) {
                return mismatch("no reasoning word was replaced");
            }
        }
        ParaphraseCategory::ReasoningCarrier => {
            let present: Vec<&str> = CARRIERS
                .iter()
                .copied()
                .filter(|c| contains_phrase(&q_words, c))
                .collect();
            if !present.is_empty() && present.iter().all(|c| contains_phrase(&p_words, c)) {
                return mismatch("the reasoning carrier is unchanged");
            }
        }
        ParaphraseCategory::HeaderSynonym | ParaphraseCategory::HeaderCarrier => {
            if !mentioned.is_empty() && mentioned.iter().all(|h| phrase_covered(h, &p_stems)) {
                return mismatch("no header mention was rephrased");
            }
        }
        ParaphraseCategory::CellValueSynonym => {
            let changed = q_nums.iter().any(|n| !p_nums.contains(n))
                || quotes(original).iter().any(|q| !p_lower.contains(&q.to_lowercase()))
                || entity_runs(original)
                    .iter()
                    .flatten()
                    .any(|w| !p_stems.contains(&stem(w)));
            if !changed {
                return mismatch("no cell value reference was rephrased");
            }
        }
        ParaphraseCategory::Simplification => {
            if p_words.len() >= q_words.len() {
                return mismatch("the paraphrase is not shorter");
            }
        }
        ParaphraseCategory::InterrogativeTransformation => {
            if is_question_form(original) == is_question_form(para) {
                return mismatch("the sentence form is unchanged");
            }
        }
        ParaphraseCategory::General => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ParaphraseCategory::*;

    fn check(cat: ParaphraseCategory, q: &str, p: &str, t: Option<&Table>) -> Option<&'static str> {
        check_paraphrase(cat, q, p, t).err().map(|r| r.class())
    }

    #[test]
    fn century_ordinal_must_match_the_year() {
        let q = "Which chinese star map was made in the 1900's?";
        assert_eq!(check(CellValueSynonym, q, "Which chinese star map was made in the twentieth century?", None), None);
        assert_eq!(
            check(CellValueSynonym, q, "Which chinese star map was made in the nineteenth century?", None),
            Some("change of meaning")
        );
    }

    #[test]
    fn carrier_kept_is_a_mismatch() {
        let t = Table::new(["Player", "Points"], [["A", "8"]]);
        assert_eq!(
            check(
                ReasoningCarrier,
                "How many players scored more than 7 points?",
                "How many athletes scored more than 7 points?",
                Some(&t)
            ),
            Some("mismatch with prompt")
        );
    }

    #[test]
    fn dropped_header_is_missing_information() {
        let t = Table::new(["Company", "Stock Code", "Country"], [["Acme", "ACM", "US"]]);
        assert_eq!(
            check(
                InterrogativeTransformation,
                "What are the stock codes of companies based in the US?",
                "Name the companies based in the US.",
                Some(&t)
            ),
            Some("information missing")
        );
        assert_eq!(
            check(
                General,
                "What are the stock codes of companies based in the US?",
                "What are the ticker symbols of companies based in the US?",
                Some(&t)
            ),
            None
        );
    }

    #[test]
    fn new_song_is_a_hallucination() {
        assert_eq!(
            check(
                General,
                "Which song charted higher, Roses or Ms. Jackson?",
                "Which song charted higher, \"Hey Ya!\" or Ms. Jackson?",
                None
            ),
            Some("hallucination")
        );
    }

    #[test]
    fn entity_runs_skip_sentence_initial_function_words() {
        assert_eq!(entity_runs("Please list Julie Covington's songs."), vec![vec!["Julie", "Covington's"]]);
        assert!(entity_runs("How many were there?").is_empty());
        assert!(entity_runs("Out of all the films, which one?").is_empty());
        assert_eq!(entity_runs("Nolan Ryan pitched"), vec![vec!["Nolan", "Ryan"]]);
    }
}
