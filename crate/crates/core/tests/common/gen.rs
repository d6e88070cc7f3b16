//! Random QA examples for property tests.

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::sample::{select, subsequence, Index};
use tabrobust::perturb::Resources;
use tabrobust::retrieval::index_corpus;
use tabrobust::{QaExample, Table};

pub const HEADERS: [&str; 16] = [
    "Year", "Team", "Points", "Score", "Country", "Player", "Date", "Result", "Position", "Number",
    "Name", "Goals", "Attendance", "Venue", "Population", "Rank",
];

const WORDS: [&str; 12] = [
    "Ajax", "PSV", "Lima", "Tokyo", "Japan", "Peru", "Els", "Singh", "Home", "Away", "W", "L",
];

const QUESTIONS: [&str; 10] = [
    "how many {h} did {c} have?",
    "which team had the most points in {c}?",
    "what is the total {h} for {c}?",
    "what was the first {h} listed?",
    "which player scored the highest {h}?",
    "in what year did {c} win?",
    "what are the names of the {h} with {c}?",
    "when was {c} the {h}?",
    "how many times is {c} listed?",
    "what is the name of the {h} for {c}?",
];

fn cell() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..200).prop_map(|n| n.to_string()),
        (0u32..6, 0u32..6).prop_map(|(a, b)| format!("{a}–{b}")),
        select(&WORDS[..]).prop_map(str::to_string),
        (select(&WORDS[..]), select(&WORDS[..])).prop_map(|(a, b)| format!("{a} / {b}")),
    ]
}

/// Dense ranks, highest value first.
fn ranks(values: &[u32]) -> Vec<String> {
    let mut distinct = values.to_vec();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.dedup();
    values
        .iter()
        .map(|v| (distinct.iter().position(|d| d == v).unwrap() + 1).to_string())
        .collect()
}

/// Tables of 2 to 5 distinct columns and 1 to 8 rows; the answer is one of
/// the cells and the question names a header and a cell. A third of the
/// tables also carry a numeric column and its rank column.
pub fn example() -> impl Strategy<Value = QaExample> {
    (2usize..=5, 1usize..=8)
        .prop_flat_map(|(w, h)| {
            (
                subsequence(&HEADERS[..], w).prop_shuffle(),
                proptest::collection::vec(proptest::collection::vec(cell(), w), h),
                any::<Index>(),
                any::<Index>(),
                any::<Index>(),
                select(&QUESTIONS[..]),
                0u32..1_000_000,
                proptest::option::weighted(0.33, proptest::collection::vec(0u32..50, h)),
            )
        })
        .prop_map(|(mut header, mut rows, ri, ci, qi, template, n, ranked)| {
            if let Some(totals) = ranked {
                header.push("Total points".into());
                header.push("Ranking".into());
                for ((row, t), r) in rows.iter_mut().zip(&totals).zip(ranks(&totals)) {
                    row.push(t.to_string());
                    row.push(r);
                }
            }
            let i = ri.index(rows.len());
            let j = ci.index(header.len());
            let answer = rows[i][j].clone();
            let named = &rows[qi.index(rows.len())][j];
            let question = template
                .replace("{h}", &header[qi.index(header.len())].to_lowercase())
                .replace("{c}", named);
            QaExample::new(format!("ex{n}"), Table::new(header, rows), question, vec![answer])
        })
}

/// Bundled lexicons plus a small retrieval corpus for column adding.
pub fn resources() -> Resources {
    static RES: OnceLock<Resources> = OnceLock::new();
    RES.get_or_init(|| {
        let mut tables = Vec::new();
        for k in 0..24 {
            let a = HEADERS[k % HEADERS.len()];
            let b = ["Coach", "Founded", "Capital", "Height", "Club", "Region"][k % 6];
            let c = ["Titles", "Stadium", "Currency", "Weight", "League", "Area"][(k / 6) % 6];
            tables.push(Table::new(
                [a, b, c],
                (0..3).map(|i| vec![format!("{}", 1990 + i + k), format!("b{k}{i}"), format!("c{k}{i}")]),
            ));
        }
        Resources::with_defaults().with_corpus(index_corpus(tables).unwrap())
    })
    .clone()
}

/// Draws `n` values from `strategy` with a fixed-seed runner.
pub fn sample<S: Strategy>(strategy: &S, n: usize) -> Vec<S::Value> {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    (0..n)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current())
        .collect()
}

