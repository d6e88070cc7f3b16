use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::parse::{parse_generation, ParseError};
use super::prompt::{build_prompt, render_completion, PromptTarget};
use super::validate::{validate_candidate, Rejection, Verdict};
use super::{DemonstrationPool, Task};
use crate::adapters::PromptError;
use crate::llm::{CompletionRequest, FixtureClient, LlmClient};
use crate::model::{PerturbationSpec, PerturbedPair, Provenance, QaExample, Table};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub rounds: u32,
    pub temperature: f64,
    /// Completions requested per round.
    pub max_candidates: u32,
    pub max_tokens: u32,
    /// Model name per role: "text" for header and question tasks, "code"
    /// for table content tasks.
    pub models: BTreeMap<String, String>,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            rounds: 3,
            temperature: 0.7,
            max_candidates: 1,
            max_tokens: 256,
            models: BTreeMap::from([
                ("text".to_string(), "text-davinci-003".to_string()),
                ("code".to_string(), "code-davinci-002".to_string()),
            ]),
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rounds < 1 {
            return Err("rounds must be at least 1".into());
        }
        if !(self.temperature >= 0.0) {
            return Err("temperature must be non-negative".into());
        }
        if self.max_candidates < 1 {
            return Err("max_candidates must be at least 1".into());
        }
        Ok(())
    }

    pub fn model_for(&self, task: Task) -> &str {
        self.models
            .get(task.model_role())
            .or_else(|| self.models.get("text"))
            .map_or("", String::as_str)
    }
}

/// Extra inputs some tasks need.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenerationContext<'a> {
    /// Retrieved tables for column adding; round `r` uses entry
    /// `r % len`.
    pub candidate_tables: &'a [Table],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RoundOutcome {
    Accepted { pair_id: String },
    Duplicate,
    ParseError { error: ParseError },
    Rejected { rejection: Rejection },
    Transport { message: String },
}

impl RoundOutcome {
    /// Tally key: "accepted", "duplicate", "parse error", "transport", or
    /// the rejection class.
    pub fn class(&self) -> &'static str {
        match self {
            RoundOutcome::Accepted { .. } => "accepted",
            RoundOutcome::Duplicate => "duplicate",
            RoundOutcome::ParseError { .. } => "parse error",
            RoundOutcome::Rejected { rejection } => rejection.class(),
            RoundOutcome::Transport { .. } => "transport",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub id: String,
    pub round: u32,
    pub sample: u32,
    #[serde(flatten)]
    pub outcome: RoundOutcome,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationResult {
    pub pairs: Vec<PerturbedPair>,
    pub rounds: Vec<RoundRecord>,
}

impl GenerationResult {
    pub fn tally(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rounds {
            *m.entry(r.outcome.class()).or_insert(0) += 1;
        }
        m
    }
}

/// Runs `config.rounds` prompt, complete, parse, validate passes for one
/// example and keeps the distinct accepted candidates as pairs with ids
/// `<id>#1`, `<id>#2`, ... . Only prompt construction errors fail the
/// call; per-round failures are recorded.
pub fn generate(
    task: Task,
    example: &QaExample,
    pool: &DemonstrationPool,
    client: &dyn LlmClient,
    config: &GenerationConfig,
    ctx: GenerationContext<'_>,
) -> Result<GenerationResult, PromptError> {
    config.validate().map_err(PromptError::MissingContext)?;
    let seed = derive_seed(config.seed, &example.id);
    let mut out = GenerationResult::default();
    let mut seen = BTreeSet::new();
    for round in 0..config.rounds {
        let candidate_table = match task {
            Task::ColAdding => {
                if ctx.candidate_tables.is_empty() {
                    return Err(PromptError::MissingContext(
                        "column adding needs retrieved candidate tables".into(),
                    ));
                }
                Some(&ctx.candidate_tables[round as usize % ctx.candidate_tables.len()])
            }
            _ => None,
        };
        let mut target = PromptTarget::example(example);
        if let Some(t) = candidate_table {
            target = target.with_candidate(t);
        }
        let prompt = build_prompt(task, pool, &target, seed)?;
        for c in 0..config.max_candidates {
            let sample = round * config.max_candidates + c;
            let mut req = CompletionRequest::new(config.model_for(task), prompt.clone());
            req.temperature = config.temperature;
            req.max_tokens = config.max_tokens;
            req.sample = sample;
            let outcome = match client.complete(&req) {
                Err(e) => RoundOutcome::Transport { message: e.to_string() },
                Ok(text) => match parse_generation(task, &text, example) {
                    Err(error) => RoundOutcome::ParseError { error },
                    Ok(cand) => {
                        let placement = derive_seed(seed, &format!("round{round}"));
                        match validate_candidate(task, example, &cand, candidate_table, placement) {
                            Verdict::Reject(rejection) => RoundOutcome::Rejected { rejection },
                            Verdict::Accept(_) if !seen.insert(cand.normalized_key()) => {
                                RoundOutcome::Duplicate
                            }
                            Verdict::Accept(post) => {
                                let pair_id = format!("{}#{}", example.id, out.pairs.len() + 1);
                                let mut spec = PerturbationSpec::new(task.perturbation_type(), seed)
                                    .with_param("source_id", example.id.clone())
                                    .with_param("task", task.to_string())
                                    .with_param("round", round)
                                    .with_param("sample", sample)
                                    .with_param("model", config.model_for(task))
                                    .with_param("candidate", serde_json::to_value(&cand).expect("serializes"));
                                if let Task::Paraphrase(cat) = task {
                                    spec = spec.with_param("category", cat.name());
                                }
                                if let Some(t) = candidate_table {
                                    spec = spec.with_param("candidate_table", json!(t));
                                }
                                let mut pre = example.clone();
                                pre.id = pair_id.clone();
                                let mut post = *post;
                                post.id = pair_id.clone();
                                out.pairs.push(PerturbedPair {
                                    id: pair_id.clone(),
                                    perturbation: spec,
                                    provenance: Provenance::Leta,
                                    pre,
                                    post,
                                });
                                RoundOutcome::Accepted { pair_id }
                            }
                        }
                    }
                },
            };
            out.rounds.push(RoundRecord {
                id: example.id.clone(),
                round,
                sample,
                outcome,
            });
        }
    }
    Ok(out)
}

/// One demonstration recast as a generation input, with the completion the
/// demonstration prescribes.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoCase {
    pub task: Task,
    pub example: QaExample,
    pub candidate_table: Option<Table>,
    pub completion: String,
}

/// Every demonstration in the pool as a [`DemoCase`], in pool order.
pub fn demo_cases(pool: &DemonstrationPool) -> Vec<DemoCase> {
    let mut out = Vec::new();
    for task in pool.tasks() {
        for (i, d) in pool.get(task).iter().enumerate() {
            out.push(DemoCase {
                task,
                example: d.to_example(&format!("demo:{task}:{i}")),
                candidate_table: d.candidate_table.clone(),
                completion: render_completion(task, d.explanation.as_deref(), &d.output),
            });
        }
    }
    out
}

/// A fixture client that answers each demonstration's own prompt, as
/// [`generate`] would build it under `seed`, with that demonstration's
/// completion.
pub fn gold_echo_client(pool: &DemonstrationPool, seed: u64) -> Result<FixtureClient, PromptError> {
    let mut client = FixtureClient::default();
    for case in demo_cases(pool) {
        let mut target = PromptTarget::example(&case.example);
        if let Some(t) = &case.candidate_table {
            target = target.with_candidate(t);
        }
        let prompt = build_prompt(case.task, pool, &target, derive_seed(seed, &case.example.id))?;
        client.insert(&prompt, None, case.completion);
    }
    Ok(client)
}
