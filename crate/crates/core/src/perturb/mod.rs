//! The perturbation engine: an operator registry, the shared resources
//! operators draw on, single-example application, mix composition, and
//! dataset-wide fan-out.
//!
//! Operators only ever replace the table and/or the question; the engine
//! builds the post example from a copy of the pre example, so answers and
//! ids are preserved by construction.

mod ops;
mod positional;
mod shuffle;

pub use ops::{
    ColumnAdding, ColumnExtension, ColumnMasking, ColumnShuffle, HeaderAbbreviation,
    HeaderSynonym, QuestionSynonym, RowShuffle,
};
pub(crate) use ops::answers_lost;
pub use positional::is_position_dependent;
pub use shuffle::{
    column_permutation, permute_columns, row_permutation, shuffle_columns, shuffle_rows,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value;

use crate::adapters::ModelAdapter;
use crate::exec::Execution;
use crate::model::{
    check_mix_levels, Level, PerturbationSpec, PerturbationType, PerturbedPair, Provenance,
    QaExample, Table,
};
use crate::retrieval::TableIndex;
use crate::rng::derive_seed;
use crate::rules::{AbbreviationRules, SynonymLexicon};

pub const POSITIONAL_SKIP: &str = "position-dependent question";

/// Key under which operators record what they did.
pub const APPLIED_KEY: &str = "applied";

/// Read-only inputs shared by operators.
#[derive(Clone, Default)]
pub struct Resources {
    pub header_synonyms: Option<Arc<SynonymLexicon>>,
    pub abbreviations: Option<Arc<AbbreviationRules>>,
    pub nlq_word: Option<Arc<SynonymLexicon>>,
    pub nlq_sentence: Option<Arc<SynonymLexicon>>,
    pub corpus: Option<Arc<TableIndex>>,
    /// When set, question operators keep only substitutions that change
    /// this model's prediction.
    pub nlq_model: Option<Arc<dyn ModelAdapter>>,
}

impl Resources {
    /// The bundled lexicons and abbreviation map; no corpus, no model.
    pub fn with_defaults() -> Self {
        Resources {
            header_synonyms: Some(Arc::new(crate::resources::header_synonyms())),
            abbreviations: Some(Arc::new(crate::resources::abbreviation_rules())),
            nlq_word: Some(Arc::new(crate::resources::nlq_word_lexicon())),
            nlq_sentence: Some(Arc::new(crate::resources::nlq_sentence_lexicon())),
            corpus: None,
            nlq_model: None,
        }
    }

    pub fn with_corpus(mut self, index: TableIndex) -> Self {
        self.corpus = Some(Arc::new(index));
        self
    }
}

/// What an operator did to one example.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Applied {
        table: Option<Table>,
        question: Option<String>,
        details: Value,
    },
    Skip(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("{kind}: missing resource `{resource}`")]
    MissingResource {
        kind: PerturbationType,
        resource: &'static str,
    },
    #[error("{kind}: {message}")]
    Operator {
        kind: PerturbationType,
        message: String,
    },
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("no operator registered for {0}")]
    Unregistered(PerturbationType),
}

pub trait Operator: Send + Sync {
    fn kind(&self) -> PerturbationType;
    fn provenance(&self) -> Provenance;
    fn apply(
        &self,
        example: &QaExample,
        spec: &PerturbationSpec,
        resources: &Resources,
    ) -> Result<Edit, PerturbError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pair(Box<PerturbedPair>),
    Skipped { id: String, reason: String },
}

impl Outcome {
    pub fn pair(&self) -> Option<&PerturbedPair> {
        match self {
            Outcome::Pair(p) => Some(p),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn into_pair(self) -> Option<PerturbedPair> {
        match self {
            Outcome::Pair(p) => Some(*p),
            Outcome::Skipped { .. } => None,
        }
    }
}

#[derive(Clone)]
pub struct OperatorRegistry {
    ops: BTreeMap<PerturbationType, Arc<dyn Operator>>,
}

impl Default for OperatorRegistry {
    fn default() -> Self {
        let mut r = OperatorRegistry { ops: BTreeMap::new() };
        r.register(Arc::new(HeaderSynonym));
        r.register(Arc::new(HeaderAbbreviation));
        r.register(Arc::new(RowShuffle));
        r.register(Arc::new(ColumnShuffle));
        r.register(Arc::new(ColumnExtension));
        r.register(Arc::new(ColumnMasking));
        r.register(Arc::new(ColumnAdding));
        r.register(Arc::new(QuestionSynonym::word()));
        r.register(Arc::new(QuestionSynonym::sentence()));
        r
    }
}

impl OperatorRegistry {
    pub fn empty() -> Self {
        OperatorRegistry { ops: BTreeMap::new() }
    }

    pub fn register(&mut self, op: Arc<dyn Operator>) {
        self.ops.insert(op.kind(), op);
    }

    pub fn get(&self, kind: PerturbationType) -> Result<&Arc<dyn Operator>, PerturbError> {
        self.ops.get(&kind).ok_or(PerturbError::Unregistered(kind))
    }

    pub fn kinds(&self) -> impl Iterator<Item = PerturbationType> + '_ {
        self.ops.keys().copied()
    }
}

fn skipped(ex: &QaExample, reason: impl Into<String>) -> Outcome {
    Outcome::Skipped {
        id: ex.id.clone(),
        reason: reason.into(),
    }
}

/// Runs one operator and returns the post example, the operator's
/// provenance, and the recorded details, or a skip reason.
fn run_operator(
    example: &QaExample,
    spec: &PerturbationSpec,
    registry: &OperatorRegistry,
    resources: &Resources,
) -> Result<Result<(QaExample, Provenance, Value), String>, PerturbError> {
    if spec.kind.is_shuffle() && is_position_dependent(&example.question) {
        return Ok(Err(POSITIONAL_SKIP.to_string()));
    }
    let op = registry.get(spec.kind)?;
    match op.apply(example, spec, resources)? {
        Edit::Skip(reason) => Ok(Err(reason)),
        Edit::Applied {
            table,
            question,
            details,
        } => {
            let mut post = example.clone();
            if let Some(t) = table {
                post.table = t;
            }
            if let Some(q) = question {
                post.question = q;
            }
            Ok(Ok((post, op.provenance(), details)))
        }
    }
}

fn spec_with_details(spec: &PerturbationSpec, details: Value) -> PerturbationSpec {
    let mut s = spec.clone();
    s.params.insert(APPLIED_KEY.to_string(), details);
    s
}

/// Applies one perturbation. Mix specs are routed to [`compose_mix`].
pub fn apply_perturbation(
    example: &QaExample,
    spec: &PerturbationSpec,
    registry: &OperatorRegistry,
    resources: &Resources,
) -> Result<Outcome, PerturbError> {
    if let Some(v) = spec.validate().into_iter().next() {
        return Err(PerturbError::InvalidSpec(v.to_string()));
    }
    if spec.kind == PerturbationType::Mix {
        let parts = spec.mix_constituents().map_err(PerturbError::InvalidSpec)?;
        let mut extra = spec.params.clone();
        extra.remove("constituents");
        extra.remove(APPLIED_KEY);
        return compose_mix_with(example, &parts, spec.seed, extra, registry, resources);
    }
    Ok(match run_operator(example, spec, registry, resources)? {
        Err(reason) => skipped(example, reason),
        Ok((post, provenance, details)) => Outcome::Pair(Box::new(PerturbedPair {
            id: example.id.clone(),
            perturbation: spec_with_details(spec, details),
            provenance,
            pre: example.clone(),
            post,
        })),
    })
}

/// Seed offset added to the mix seed for each constituent level.
pub fn level_seed_offset(level: Level) -> u64 {
    match level {
        Level::Header => 101,
        Level::Content => 202,
        Level::Nlq => 303,
        Level::Mix => 0,
    }
}

/// Applies 2–3 constituents of distinct levels in the order header →
/// content → question. A skip of any constituent skips the mix.
pub fn compose_mix(
    example: &QaExample,
    constituents: &[PerturbationSpec],
    seed: u64,
    registry: &OperatorRegistry,
    resources: &Resources,
) -> Result<Outcome, PerturbError> {
    compose_mix_with(example, constituents, seed, BTreeMap::new(), registry, resources)
}

fn compose_mix_with(
    example: &QaExample,
    constituents: &[PerturbationSpec],
    seed: u64,
    extra_params: BTreeMap<String, Value>,
    registry: &OperatorRegistry,
    resources: &Resources,
) -> Result<Outcome, PerturbError> {
    check_mix_levels(constituents).map_err(PerturbError::InvalidSpec)?;
    let mut ordered: Vec<PerturbationSpec> = constituents.to_vec();
    ordered.sort_by_key(|s| s.kind.level());
    let mut current = example.clone();
    let mut provenance = Provenance::Heuristic;
    let mut applied = Vec::with_capacity(ordered.len());
    for part in &ordered {
        let mut sub = part.clone();
        sub.level = sub.kind.level();
        sub.seed = seed.wrapping_add(level_seed_offset(sub.level));
        sub.params.remove(APPLIED_KEY);
        if sub.kind.is_shuffle() && is_position_dependent(&example.question) {
            return Ok(skipped(example, format!("{}: {POSITIONAL_SKIP}", sub.kind)));
        }
        match run_operator(&current, &sub, registry, resources)? {
            Err(reason) => return Ok(skipped(example, format!("{}: {reason}", sub.kind))),
            Ok((post, prov, details)) => {
                current = post;
                provenance = provenance.max(prov);
                applied.push(spec_with_details(&sub, details));
            }
        }
    }
    let mut spec = PerturbationSpec::new(PerturbationType::Mix, seed);
    spec.params = extra_params;
    spec.params.insert(
        "constituents".to_string(),
        serde_json::to_value(&applied).expect("specs serialize"),
    );
    Ok(Outcome::Pair(Box::new(PerturbedPair {
        id: example.id.clone(),
        perturbation: spec,
        provenance,
        pre: example.clone(),
        post: current,
    })))
}

/// Applies `spec` to every example with a per-example seed derived from the
/// spec seed and the example id, in input order.
pub fn perturb_dataset(
    examples: &[QaExample],
    spec: &PerturbationSpec,
    registry: &OperatorRegistry,
    resources: &Resources,
    exec: Execution,
) -> Result<Vec<Outcome>, PerturbError> {
    if let Some(v) = spec.validate().into_iter().next() {
        return Err(PerturbError::InvalidSpec(v.to_string()));
    }
    exec.try_map(examples, |ex| {
        let mut s = spec.clone();
        s.seed = derive_seed(spec.seed, &ex.id);
        apply_perturbation(ex, &s, registry, resources)
    })
}

/// Counts per skip reason, sorted by reason.
pub fn skip_tally(outcomes: &[Outcome]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for o in outcomes {
        if let Outcome::Skipped { reason, .. } = o {
            *m.entry(reason.clone()).or_insert(0) += 1;
        }
    }
    m
}
