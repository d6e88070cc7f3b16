mod common;

use tabrobust::augment::{build_prompt, DemonstrationPool, PromptTarget, Task};
use tabrobust::resources::demonstration_pool;
use tabrobust::Table;

#[test]
fn prompts_match_frozen_goldens() {
    let bad = common::golden_mismatches();
    assert!(bad.is_empty(), "prompts differ from goldens: {bad:?}");
}

#[test]
fn one_golden_per_task_and_the_qa_prompt() {
    assert_eq!(common::rendered_prompts().len(), Task::all().len() + 1);
}

#[test]
fn carrier_prompt_shows_the_quantity_rewrite() {
    let prompts = common::rendered_prompts();
    let (_, text) = prompts.iter().find(|(n, _)| n == "nlq_reasoning_carrier.txt").unwrap();
    assert!(text.contains("How many cities are above 1 million in population?"));
    assert!(text.contains("What is the quantity of"));
}

#[test]
fn header_prompt_shows_header_and_two_rows() {
    let prompts = common::rendered_prompts();
    let (_, text) = prompts.iter().find(|(n, _)| n == "header_synonym.txt").unwrap();
    let target = text.rsplit("\n---\n").next().unwrap();
    assert!(target.contains("Year | Score | Venue"));
    assert!(target.contains("2002"));
    assert!(!target.contains("2003"), "only the first two rows are shown");
}

#[test]
fn small_pool_is_an_error() {
    let task = Task::Paraphrase(tabrobust::augment::ParaphraseCategory::General);
    let four: Vec<_> = demonstration_pool().get(task).iter().take(4).cloned().collect();
    let pool = DemonstrationPool::from_demos(four);
    let t = Table::new(["A"], [["1"]]);
    let target = PromptTarget { table: Some(&t), question: Some("What is A?"), candidate_table: None };
    assert!(build_prompt(task, &pool, &target, 0).is_err());
}

#[test]
fn seed_selects_demonstrations_only_when_the_pool_is_large() {
    let t = Table::new(["Year", "Score"], [["2001", "3"]]);
    let target = PromptTarget { table: Some(&t), ..Default::default() };
    let pool = demonstration_pool();
    // exactly ten header demonstrations: every seed renders the same prompt
    assert_eq!(
        build_prompt(Task::HeaderSynonym, &pool, &target, 1).unwrap(),
        build_prompt(Task::HeaderSynonym, &pool, &target, 2).unwrap()
    );
}
