//! LLM-assisted perturbation generation: per-task prompts built from
//! demonstration pools, completion parsing, heuristic validation, and a
//! multi-round generation loop.
//!
//! A generation task is either a header or content perturbation type, or
//! one question paraphrase category. Each task owns an answer delimiter
//! (`New header:`, `Extended column:`, `Masked column:`, `Added column:`,
//! `Paraphrase:`) that the parser anchors on.

mod demos;
mod generate;
mod parse;
mod prompt;
mod validate;

pub use demos::{Demonstration, DemonstrationPool, PoolError};
pub use generate::{
    demo_cases, generate, gold_echo_client, DemoCase, GenerationConfig, GenerationContext,
    GenerationResult, RoundOutcome, RoundRecord,
};
pub use parse::{apply_candidate, parse_generation, Candidate, ParseError};
pub use prompt::{build_prompt, instruction, render_completion, PromptTarget};
pub use validate::{validate_candidate, Rejection, Verdict};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::PerturbationType;

/// Word or sentence granularity of a question paraphrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaphraseLevel {
    Word,
    Sentence,
}

impl ParaphraseLevel {
    pub fn perturbation_type(self) -> PerturbationType {
        match self {
            ParaphraseLevel::Word => PerturbationType::NlqWord,
            ParaphraseLevel::Sentence => PerturbationType::NlqSentence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaphraseCategory {
    ReasoningSynonym,
    ReasoningCarrier,
    HeaderSynonym,
    HeaderCarrier,
    CellValueSynonym,
    Simplification,
    InterrogativeTransformation,
    General,
}

impl ParaphraseCategory {
    pub const ALL: [ParaphraseCategory; 8] = [
        ParaphraseCategory::ReasoningSynonym,
        ParaphraseCategory::ReasoningCarrier,
        ParaphraseCategory::HeaderSynonym,
        ParaphraseCategory::HeaderCarrier,
        ParaphraseCategory::CellValueSynonym,
        ParaphraseCategory::Simplification,
        ParaphraseCategory::InterrogativeTransformation,
        ParaphraseCategory::General,
    ];

    pub fn level(self) -> ParaphraseLevel {
        use ParaphraseCategory::*;
        match self {
            ReasoningSynonym | ReasoningCarrier | HeaderSynonym | HeaderCarrier | CellValueSynonym => {
                ParaphraseLevel::Word
            }
            Simplification | InterrogativeTransformation | General => ParaphraseLevel::Sentence,
        }
    }

    /// Display name, e.g. "Reasoning-synonym".
    pub fn name(self) -> &'static str {
        use ParaphraseCategory::*;
        match self {
            ReasoningSynonym => "Reasoning-synonym",
            ReasoningCarrier => "Reasoning-carrier",
            HeaderSynonym => "Header-synonym",
            HeaderCarrier => "Header-carrier",
            CellValueSynonym => "Cell-Value-synonym",
            Simplification => "Simplification",
            InterrogativeTransformation => "Interrogative Transformation",
            General => "General",
        }
    }

    /// Machine key, e.g. "reasoning_synonym".
    pub fn key(self) -> &'static str {
        use ParaphraseCategory::*;
        match self {
            ReasoningSynonym => "reasoning_synonym",
            ReasoningCarrier => "reasoning_carrier",
            HeaderSynonym => "header_synonym",
            HeaderCarrier => "header_carrier",
            CellValueSynonym => "cell_value_synonym",
            Simplification => "simplification",
            InterrogativeTransformation => "interrogative_transformation",
            General => "general",
        }
    }

    pub fn description(self) -> &'static str {
        use ParaphraseCategory::*;
        match self {
            ReasoningSynonym => "replace a word that signals the reasoning operation with a synonym",
            ReasoningCarrier => "rephrase the words that carry the reasoning operation",
            HeaderSynonym => "refer to a table column with a synonym of its header name",
            HeaderCarrier => "rephrase the words that point to a table column",
            CellValueSynonym => "refer to a cell value with an equivalent expression",
            Simplification => "shorten the question while keeping its meaning",
            InterrogativeTransformation => "turn the question into a request, or the request into a question",
            General => "rephrase the question freely while keeping its meaning",
        }
    }

    pub fn in_level(level: ParaphraseLevel) -> impl Iterator<Item = ParaphraseCategory> {
        Self::ALL.into_iter().filter(move |c| c.level() == level)
    }
}

impl fmt::Display for ParaphraseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown generation task `{0}`")]
pub struct UnknownTask(pub String);

impl FromStr for ParaphraseCategory {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.key() == t || c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownTask(s.to_string()))
    }
}

/// One unit of generation work: a table perturbation type or a question
/// paraphrase category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    HeaderSynonym,
    HeaderAbbrev,
    ColExtension,
    ColMasking,
    ColAdding,
    Paraphrase(ParaphraseCategory),
}

impl Task {
    pub fn all() -> Vec<Task> {
        let mut v = vec![
            Task::HeaderSynonym,
            Task::HeaderAbbrev,
            Task::ColExtension,
            Task::ColMasking,
            Task::ColAdding,
        ];
        v.extend(ParaphraseCategory::ALL.into_iter().map(Task::Paraphrase));
        v
    }

    /// The tasks that produce pairs of `kind`; empty for kinds that are not
    /// generated (shuffles, mix).
    pub fn for_type(kind: PerturbationType) -> Vec<Task> {
        match kind {
            PerturbationType::HeaderSynonym => vec![Task::HeaderSynonym],
            PerturbationType::HeaderAbbrev => vec![Task::HeaderAbbrev],
            PerturbationType::ColExtension => vec![Task::ColExtension],
            PerturbationType::ColMasking => vec![Task::ColMasking],
            PerturbationType::ColAdding => vec![Task::ColAdding],
            PerturbationType::NlqWord => ParaphraseCategory::in_level(ParaphraseLevel::Word)
                .map(Task::Paraphrase)
                .collect(),
            PerturbationType::NlqSentence => ParaphraseCategory::in_level(ParaphraseLevel::Sentence)
                .map(Task::Paraphrase)
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn perturbation_type(self) -> PerturbationType {
        match self {
            Task::HeaderSynonym => PerturbationType::HeaderSynonym,
            Task::HeaderAbbrev => PerturbationType::HeaderAbbrev,
            Task::ColExtension => PerturbationType::ColExtension,
            Task::ColMasking => PerturbationType::ColMasking,
            Task::ColAdding => PerturbationType::ColAdding,
            Task::Paraphrase(c) => c.level().perturbation_type(),
        }
    }

    /// The type name for table tasks, `nlq:<category key>` for paraphrases.
    pub fn name(self) -> String {
        match self {
            Task::Paraphrase(c) => format!("nlq:{}", c.key()),
            other => other.perturbation_type().as_str().to_string(),
        }
    }

    /// Minimum and maximum number of demonstrations in a prompt.
    pub fn slots(self) -> (usize, usize) {
        match self {
            Task::HeaderSynonym | Task::HeaderAbbrev => (10, 10),
            Task::ColExtension | Task::ColMasking | Task::ColAdding => (8, 8),
            Task::Paraphrase(_) => (5, 8),
        }
    }

    pub fn delimiter(self) -> &'static str {
        match self {
            Task::HeaderSynonym | Task::HeaderAbbrev => "New header:",
            Task::ColExtension => "Extended column:",
            Task::ColMasking => "Masked column:",
            Task::ColAdding => "Added column:",
            Task::Paraphrase(_) => "Paraphrase:",
        }
    }

    /// Which generator model family the task is routed to in
    /// [`GenerationConfig::model_for`].
    pub fn model_role(self) -> &'static str {
        match self {
            Task::ColExtension | Task::ColMasking | Task::ColAdding => "code",
            _ => "text",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Task {
    type Err = UnknownTask;

    /// Accepts a table type name or a paraphrase category. The bare key
    /// `header_synonym` names the table task; use `Header-synonym` or
    /// `nlq:header_synonym` for the paraphrase category.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("nlq:") {
            return rest.parse().map(Task::Paraphrase);
        }
        if let Some(c) = ParaphraseCategory::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(t)) {
            return Ok(Task::Paraphrase(c));
        }
        if let Ok(kind) = t.parse::<PerturbationType>() {
            if let [task] = Task::for_type(kind)[..] {
                return Ok(task);
            }
        }
        t.parse().map(Task::Paraphrase)
    }
}

impl Serialize for Task {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
