//! Bundled default lexicons and demonstration pools, compiled into the
//! binary. Every loader has a file-based counterpart so users can swap in
//! their own copies.

use crate::adapters::QaDemo;
use crate::augment::DemonstrationPool;
use crate::rules::{AbbreviationRules, SynonymLexicon};

pub const HEADER_SYNONYMS: &str = include_str!("../resources/lexicons/header_synonyms.tsv");
pub const HEADER_ABBREVIATIONS: &str = include_str!("../resources/lexicons/header_abbreviations.tsv");
pub const NLQ_WORD: &str = include_str!("../resources/lexicons/nlq_word.tsv");
pub const NLQ_SENTENCE: &str = include_str!("../resources/lexicons/nlq_sentence.tsv");
pub const DEMONSTRATIONS: &str = include_str!("../resources/demos/demonstrations.jsonl");
pub const QA_DEMOS: &str = include_str!("../resources/demos/qa_demos.json");

pub fn header_synonyms() -> SynonymLexicon {
    SynonymLexicon::parse(HEADER_SYNONYMS, "header_synonyms.tsv").expect("bundled lexicon parses")
}

pub fn abbreviation_rules() -> AbbreviationRules {
    AbbreviationRules::parse(HEADER_ABBREVIATIONS).expect("bundled abbreviations parse")
}

pub fn nlq_word_lexicon() -> SynonymLexicon {
    SynonymLexicon::parse(NLQ_WORD, "nlq_word.tsv").expect("bundled lexicon parses")
}

pub fn nlq_sentence_lexicon() -> SynonymLexicon {
    SynonymLexicon::parse(NLQ_SENTENCE, "nlq_sentence.tsv").expect("bundled lexicon parses")
}

pub fn demonstration_pool() -> DemonstrationPool {
    DemonstrationPool::parse(DEMONSTRATIONS.as_bytes()).expect("bundled demonstrations parse")
}

pub fn qa_demos() -> Vec<QaDemo> {
    serde_json::from_str(QA_DEMOS).expect("bundled QA demonstrations parse")
}
