mod common;

use common::gen;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use tabrobust::perturb::{apply_perturbation, OperatorRegistry, Outcome, Resources};
use tabrobust::{PerturbationSpec, PerturbationType as P, QaExample, Table};

fn sound_over_random_examples(kind: P, cases: u32) {
    let res = gen::resources();
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&gen::example(), |ex| {
            common::check_soundness(kind, &ex, &res).map_err(TestCaseError::fail)
        })
        .unwrap();
}

macro_rules! soundness {
    ($($name:ident => $kind:expr),* $(,)?) => {$(
        #[test]
        fn $name() {
            sound_over_random_examples($kind, 10_000);
        }
    )*};
}

soundness! {
    header_synonym_is_sound => P::HeaderSynonym,
    header_abbrev_is_sound => P::HeaderAbbrev,
    row_shuffle_is_sound => P::RowShuffle,
    col_shuffle_is_sound => P::ColShuffle,
    col_extension_is_sound => P::ColExtension,
    col_masking_is_sound => P::ColMasking,
    col_adding_is_sound => P::ColAdding,
    nlq_word_is_sound => P::NlqWord,
    nlq_sentence_is_sound => P::NlqSentence,
    mix_is_sound => P::Mix,
}

#[test]
fn column_shuffle_is_uniform_over_permutations() {
    let t = Table::new(["0", "1", "2", "3"], [["a", "b", "c", "d"]]);
    let counts = common::shuffle_permutations(P::ColShuffle, &t, 24_000);
    assert_eq!(counts.len(), 24);
    // 23 degrees of freedom, critical value at p = 0.001
    let chi = common::permutation_chi_square(&counts, 4, 24_000);
    assert!(chi < 49.73, "chi-square {chi}");
}

#[test]
fn row_shuffle_is_uniform_over_permutations() {
    let t = Table::new(["i", "v"], (0..3).map(|i| [i.to_string(), "b".to_string()]));
    let counts = common::shuffle_permutations(P::RowShuffle, &t, 6_000);
    assert_eq!(counts.len(), 6);
    // 5 degrees of freedom, p = 0.001
    assert!(common::permutation_chi_square(&counts, 3, 6_000) < 20.52);
}

#[test]
fn positional_questions_are_not_shuffled() {
    let ex = QaExample::new(
        "p",
        Table::new(["Name"], [["a"], ["b"]]),
        "what is the first name in the list?",
        vec!["a".into()],
    );
    let out = apply_perturbation(&ex, &PerturbationSpec::new(P::RowShuffle, 1), &OperatorRegistry::default(), &Resources::default()).unwrap();
    assert!(matches!(out, Outcome::Skipped { .. }));
}

#[test]
fn every_operator_applies_to_some_random_examples() {
    let examples = common::distinct_examples(2000);
    for (kind, n) in common::applied_counts(&examples) {
        println!("{kind}: {n}/{}", examples.len());
        assert!(n * 20 >= examples.len(), "{kind} applied to only {n} examples");
    }
}

#[test]
fn table_and_question_operators_commute() {
    let examples = common::distinct_examples(100);
    for (a, b) in common::commuting_pairs() {
        let outcomes: Vec<(bool, bool)> = examples.iter().map(|ex| common::commutes(a, b, ex)).collect();
        let bad = outcomes.iter().filter(|o| !o.0).count();
        let applied = outcomes.iter().filter(|o| o.1).count();
        assert_eq!(bad, 0, "{a} x {b}");
        assert!(applied > 0, "{a} x {b} never applied");
    }
}
