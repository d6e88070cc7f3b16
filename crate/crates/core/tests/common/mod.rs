//! Fixtures shared by the integration tests and the acceptance target.
#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use serde::Deserialize;
use tabrobust::augment::{validate_candidate, Candidate, ParaphraseCategory, Task, Verdict};
use tabrobust::{QaExample, Table};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// One constructed paraphrase that breaks exactly one error class.
#[derive(Debug, Deserialize)]
pub struct SuiteCase {
    pub class: String,
    pub category: ParaphraseCategory,
    pub table: Table,
    pub question: String,
    pub paraphrase: String,
    pub note: String,
}

pub const ERROR_CLASSES: [&str; 4] = [
    "hallucination",
    "change of meaning",
    "information missing",
    "mismatch with prompt",
];

pub fn validator_suite() -> Vec<SuiteCase> {
    let text = std::fs::read_to_string(fixture("validator_suite.jsonl")).unwrap();
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// The class the validator assigned, or "accepted".
pub fn verdict_class(case: &SuiteCase) -> &'static str {
    let ex = QaExample::new(
        "suite",
        case.table.clone(),
        case.question.clone(),
        vec!["x".into()],
    );
    let cand = Candidate::Paraphrase {
        question: case.paraphrase.clone(),
    };
    match validate_candidate(Task::Paraphrase(case.category), &ex, &cand, None, 0) {
        Verdict::Accept(_) => "accepted",
        Verdict::Reject(r) => r.class(),
    }
}

/// Per class: (matched, total, misses as "question -> paraphrase: got").
pub fn suite_scores() -> Vec<(&'static str, usize, usize, Vec<String>)> {
    let cases = validator_suite();
    ERROR_CLASSES
        .iter()
        .map(|&class| {
            let mine: Vec<&SuiteCase> = cases.iter().filter(|c| c.class == class).collect();
            let mut misses = Vec::new();
            for c in &mine {
                let got = verdict_class(c);
                if got != class {
                    misses.push(format!("{} -> {}: {got} ({})", c.question, c.paraphrase, c.note));
                }
            }
            (class, mine.len() - misses.len(), mine.len(), misses)
        })
        .collect()
}

/// Every generation prompt plus the reasoning QA prompt, rendered for fixed
/// targets, as (golden file name, text).
pub fn rendered_prompts() -> Vec<(String, String)> {
    use tabrobust::adapters::{build_qa_cot_prompt, DEFAULT_SHOTS};
    use tabrobust::augment::{build_prompt, PromptTarget};
    use tabrobust::resources::{demonstration_pool, qa_demos};

    let pool = demonstration_pool();
    let scores = Table::new(
        ["Year", "Score", "Venue"],
        [["2001", "3–1", "Amsterdam"], ["2002", "0–2", "Rotterdam"], ["2003", "2–2", "Eindhoven"]],
    );
    let question = "What was the score in 2002?";
    let candidate = Table::new(
        ["Year", "Attendance", "Referee"],
        [["2001", "41,000", "Pierluigi Collina"], ["2002", "38,500", "Howard Webb"]],
    );
    let mut out = Vec::new();
    for task in Task::all() {
        let mut target = PromptTarget {
            table: Some(&scores),
            question: (!matches!(task, Task::HeaderSynonym | Task::HeaderAbbrev)).then_some(question),
            candidate_table: None,
        };
        if task == Task::ColAdding {
            target = target.with_candidate(&candidate);
        }
        let text = build_prompt(task, &pool, &target, 7).unwrap();
        let name = task.to_string().replace("nlq:", "nlq_");
        out.push((format!("{name}.txt"), text));
    }
    let qa = build_qa_cot_prompt(&qa_demos(), &scores, question, DEFAULT_SHOTS).unwrap();
    out.push(("qa_cot.txt".into(), qa));
    out
}

/// Names of rendered prompts whose text differs from the frozen golden.
/// With `TABROBUST_BLESS=1` the goldens are rewritten instead.
pub fn golden_mismatches() -> Vec<String> {
    let dir = fixture("goldens");
    let bless = std::env::var("TABROBUST_BLESS").is_ok_and(|v| v == "1");
    let mut bad = Vec::new();
    for (name, text) in rendered_prompts() {
        let path = dir.join(&name);
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(frozen) if frozen == text => {}
            _ => bad.push(name),
        }
    }
    bad
}

/// Constituents used when the structural checks exercise mix.
pub const MIX_CONSTITUENTS: &str = "header_synonym,row_shuffle,nlq_word";

pub fn spec_for(kind: tabrobust::PerturbationType, seed: u64) -> tabrobust::PerturbationSpec {
    let spec = tabrobust::PerturbationSpec::new(kind, seed);
    if kind == tabrobust::PerturbationType::Mix {
        spec.with_param("constituents", MIX_CONSTITUENTS)
    } else {
        spec
    }
}

fn sorted_columns(t: &Table) -> Vec<Vec<String>> {
    let mut cols: Vec<Vec<String>> = (0..t.width())
        .map(|j| std::iter::once(t.header[j].clone()).chain(t.column(j).map(str::to_string)).collect())
        .collect();
    cols.sort();
    cols
}

/// Applies `kind` to `ex` and checks answer preservation plus the
/// structural guarantees of the shuffles. Skips pass.
pub fn check_soundness(
    kind: tabrobust::PerturbationType,
    ex: &QaExample,
    resources: &tabrobust::perturb::Resources,
) -> Result<(), String> {
    use tabrobust::perturb::{apply_perturbation, OperatorRegistry, Outcome};
    use tabrobust::PerturbationType as P;

    let registry = OperatorRegistry::default();
    let seed = tabrobust::rng::derive_seed(17, &ex.id);
    let outcome = apply_perturbation(ex, &spec_for(kind, seed), &registry, resources)
        .map_err(|e| format!("{kind}: {e}"))?;
    let Outcome::Pair(pair) = outcome else { return Ok(()) };
    let fail = |what: &str| Err(format!("{kind} on {}: {what}", ex.id));
    if let Some(v) = pair.validate().first() {
        return fail(&v.to_string());
    }
    if pair.post.answers != pair.pre.answers {
        return fail("answers changed");
    }
    let lost = ex
        .answers
        .iter()
        .any(|a| ex.table.contains_cell(a) && !pair.post.table.contains_cell(a));
    if lost {
        return fail("an answer cell disappeared");
    }
    match kind {
        P::RowShuffle => {
            let mut a = ex.table.rows.clone();
            let mut b = pair.post.table.rows.clone();
            a.sort();
            b.sort();
            if a != b || ex.table.header != pair.post.table.header {
                return fail("rows are not a permutation");
            }
        }
        P::ColShuffle => {
            if sorted_columns(&ex.table) != sorted_columns(&pair.post.table) {
                return fail("columns are not a permutation");
            }
        }
        _ => {}
    }
    Ok(())
}

/// Chi-square statistic of the observed permutation counts against the
/// uniform distribution over `n!` permutations.
pub fn permutation_chi_square(counts: &std::collections::BTreeMap<Vec<usize>, usize>, n: usize, draws: usize) -> f64 {
    let cells: usize = (1..=n).product();
    let expected = draws as f64 / cells as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let unseen = (cells - counts.len()) as f64 * expected;
    seen + unseen
}

/// One transcribed (type, model) cell of a published robustness table.
#[derive(Debug, Clone)]
pub struct PublishedCell {
    pub perturbation: String,
    pub model: String,
    pub pre: f64,
    pub post: f64,
    pub r_acc: f64,
}

pub fn published_cells() -> Vec<PublishedCell> {
    let text = std::fs::read_to_string(fixture("published_results.tsv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            PublishedCell {
                perturbation: f[0].into(),
                model: f[1].into(),
                pre: f[2].parse().unwrap(),
                post: f[3].parse().unwrap(),
                r_acc: f[4].parse().unwrap(),
            }
        })
        .collect()
}

/// Rounding slack for one-decimal published values.
pub const PUBLISHED_SLACK: f64 = 0.15;

/// Cells whose R-Acc exceeds 100 × Post/Pre beyond rounding slack.
pub fn inconsistent_cells() -> Vec<String> {
    published_cells()
        .into_iter()
        .filter(|c| !tabrobust::metrics::r_acc_within_bound(c.pre, c.post, c.r_acc, PUBLISHED_SLACK))
        .map(|c| format!("{}/{}", c.perturbation, c.model))
        .collect()
}

/// Random scored pair sets compared against a brute-force set computation;
/// returns the number of sets where the streaming value differs.
pub fn oracle_mismatches(sets: usize) -> usize {
    use std::collections::HashSet;
    use tabrobust::metrics::{robustness_accuracy, RobustnessTally, ScoredPair};
    use tabrobust::rng::SeededRng;

    let mut rng = SeededRng::new(2024);
    let mut bad = 0;
    for _ in 0..sets {
        let n = rng.below(200);
        let bias = rng.unit();
        let scored: Vec<ScoredPair> = (0..n)
            .map(|i| ScoredPair {
                id: format!("p{i}"),
                pre_correct: rng.chance(bias),
                post_correct: rng.chance(bias),
            })
            .collect();
        let pre: HashSet<&str> = scored.iter().filter(|s| s.pre_correct).map(|s| s.id.as_str()).collect();
        let post: HashSet<&str> = scored.iter().filter(|s| s.post_correct).map(|s| s.id.as_str()).collect();
        let both = pre.intersection(&post).count();
        let brute = (!pre.is_empty()).then(|| 100.0 * both as f64 / pre.len() as f64);
        // streaming over chunks and merging must agree too
        let merged = scored
            .chunks(7)
            .map(|c| {
                let mut t = RobustnessTally::default();
                c.iter().for_each(|s| t.push(s));
                t
            })
            .fold(RobustnessTally::default(), RobustnessTally::merge);
        if robustness_accuracy(&scored) != brute || merged.r_acc() != brute {
            bad += 1;
        }
    }
    bad
}

pub fn first_row_examples() -> Vec<QaExample> {
    tabrobust::jsonl::read_examples(&fixture("first_row_examples.jsonl")).unwrap()
}

/// Row-shuffles the first-row fixture under `seed` and scores the
/// first-row mock; returns (pre_acc, post_acc).
pub fn first_row_sensitivity(seed: u64) -> (f64, f64) {
    use tabrobust::adapters::{predict_pairs, FirstRowAdapter};
    use tabrobust::metrics::{build_report, ReportOptions};
    use tabrobust::perturb::{perturb_dataset, OperatorRegistry, Resources};
    use tabrobust::{Execution, PerturbationSpec, PerturbationType};

    let examples = first_row_examples();
    let spec = PerturbationSpec::new(PerturbationType::RowShuffle, seed);
    let pairs: Vec<_> = perturb_dataset(&examples, &spec, &OperatorRegistry::default(), &Resources::default(), Execution::default())
        .unwrap()
        .into_iter()
        .filter_map(|o| o.into_pair())
        .collect();
    assert_eq!(pairs.len(), examples.len());
    let preds = predict_pairs(&FirstRowAdapter, &pairs, Execution::default()).unwrap();
    let report = build_report("first_row", &pairs, &preds, None, ReportOptions::default()).unwrap();
    (report.rows[0].pre_acc, report.rows[0].post_acc)
}

/// Perturbs random examples with every operator and scores the gold mock
/// over the resulting pairs; returns (pre, post, r_acc) per type.
pub fn gold_identity(examples: &[QaExample]) -> Vec<(String, f64, f64, Option<f64>)> {
    use tabrobust::adapters::{predict_pairs, GoldAdapter};
    use tabrobust::metrics::{build_report, ReportOptions};
    use tabrobust::perturb::{perturb_dataset, OperatorRegistry};
    use tabrobust::{Execution, PerturbationType};

    let res = gen::resources();
    let mut pairs = Vec::new();
    for kind in PerturbationType::ALL {
        let out = perturb_dataset(examples, &spec_for(kind, 9), &OperatorRegistry::default(), &res, Execution::default()).unwrap();
        // ids repeat across types; predictions are keyed by pair id
        pairs.extend(out.into_iter().filter_map(|o| o.into_pair()).map(|mut p| {
            p.id = format!("{kind}:{}", p.id);
            p.pre.id = p.id.clone();
            p.post.id = p.id.clone();
            p
        }));
    }
    let gold = GoldAdapter::from_pairs(&pairs);
    let preds = predict_pairs(&gold, &pairs, Execution::default()).unwrap();
    let report = build_report("gold", &pairs, &preds, None, ReportOptions::default()).unwrap();
    report.rows.iter().map(|r| (r.perturbation.clone(), r.pre_acc, r.post_acc, r.r_acc)).collect()
}

/// Random examples with distinct ids and distinct (table, question) keys.
pub fn distinct_examples(n: usize) -> Vec<QaExample> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (k, mut ex) in gen::sample(&gen::example(), n * 2).into_iter().enumerate() {
        ex.id = format!("r{k}");
        if seen.insert((ex.table.clone(), ex.question.clone())) {
            out.push(ex);
        }
        if out.len() == n {
            break;
        }
    }
    out
}

/// How many of `examples` each operator turns into a pair.
pub fn applied_counts(examples: &[QaExample]) -> Vec<(tabrobust::PerturbationType, usize)> {
    use tabrobust::perturb::{perturb_dataset, OperatorRegistry};
    let res = gen::resources();
    tabrobust::PerturbationType::ALL
        .into_iter()
        .map(|kind| {
            let out = perturb_dataset(examples, &spec_for(kind, 3), &OperatorRegistry::default(), &res, tabrobust::Execution::default()).unwrap();
            (kind, out.iter().filter(|o| o.pair().is_some()).count())
        })
        .collect()
}

/// Runs one operator directly; `None` when it skips.
fn apply_op(kind: tabrobust::PerturbationType, ex: &QaExample, seed: u64) -> Option<QaExample> {
    use tabrobust::perturb::{Edit, OperatorRegistry};
    let registry = OperatorRegistry::default();
    let op = registry.get(kind).unwrap();
    match op.apply(ex, &spec_for(kind, seed), &gen::resources()).unwrap() {
        Edit::Skip(_) => None,
        Edit::Applied { table, question, .. } => {
            let mut post = ex.clone();
            if let Some(t) = table {
                post.table = t;
            }
            if let Some(q) = question {
                post.question = q;
            }
            Some(post)
        }
    }
}

/// Whether applying `a` then `b` gives the same example as `b` then `a`
/// (a skip anywhere counts as the outcome), and whether both orders applied.
pub fn commutes(a: tabrobust::PerturbationType, b: tabrobust::PerturbationType, ex: &QaExample) -> (bool, bool) {
    let (sa, sb) = (tabrobust::rng::derive_seed(1, &ex.id), tabrobust::rng::derive_seed(2, &ex.id));
    let ab = apply_op(a, ex, sa).and_then(|x| apply_op(b, &x, sb));
    let ba = apply_op(b, ex, sb).and_then(|x| apply_op(a, &x, sa));
    (ab == ba, ab.is_some())
}

/// The operator pairs whose order must not matter.
pub fn commuting_pairs() -> Vec<(tabrobust::PerturbationType, tabrobust::PerturbationType)> {
    use tabrobust::PerturbationType as P;
    let mut out = vec![(P::HeaderSynonym, P::RowShuffle), (P::HeaderAbbrev, P::RowShuffle)];
    let table_ops = [
        P::HeaderSynonym, P::HeaderAbbrev, P::RowShuffle, P::ColShuffle, P::ColExtension,
        P::ColMasking, P::ColAdding,
    ];
    for t in table_ops {
        for q in [P::NlqWord, P::NlqSentence] {
            out.push((t, q));
        }
    }
    out
}

#[derive(Debug, Deserialize)]
pub struct Planted {
    pub query: usize,
    pub duplicate: usize,
}

pub fn retrieval_fixture() -> (Vec<Table>, Vec<Planted>) {
    let corpus = tabrobust::jsonl::read_table_corpus(&fixture("retrieval_corpus.jsonl")).unwrap();
    let planted = serde_json::from_str(&std::fs::read_to_string(fixture("retrieval_planted.json")).unwrap()).unwrap();
    (corpus, planted)
}

/// Dense tf-idf cosine of `query` against every document, written out
/// term by term.
pub fn brute_force_cosine(corpus: &[Table], query: &Table) -> Vec<f64> {
    use std::collections::BTreeMap;
    use tabrobust::retrieval::document_terms;

    let docs: Vec<Vec<String>> = corpus.iter().map(document_terms).collect();
    let n = corpus.len() as f64;
    let idf = |term: &str| {
        let df = docs.iter().filter(|d| d.iter().any(|t| t == term)).count() as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    };
    let vector = |terms: &[String]| {
        let mut v: BTreeMap<String, f64> = BTreeMap::new();
        for t in terms {
            *v.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        for (t, w) in v.iter_mut() {
            *w *= idf(t);
        }
        v
    };
    let q = vector(&document_terms(query));
    let qn = q.values().map(|w| w * w).sum::<f64>().sqrt();
    docs.iter()
        .map(|d| {
            let v = vector(d);
            let dn = v.values().map(|w| w * w).sum::<f64>().sqrt();
            let dot: f64 = q.iter().map(|(t, w)| w * v.get(t).unwrap_or(&0.0)).sum();
            if qn == 0.0 || dn == 0.0 { 0.0 } else { dot / (qn * dn) }
        })
        .collect()
}

/// (planted duplicates found in the top 3, planted total, queries where the
/// index's top 3 is not a brute-force top 3). Scores within 1e-12 count as
/// tied, so rounding in either computation cannot flip the verdict.
pub fn retrieval_recall() -> (usize, usize, usize) {
    use tabrobust::retrieval::{index_corpus, DEFAULT_K};
    let (corpus, planted) = retrieval_fixture();
    let index = index_corpus(corpus.clone()).unwrap();
    let mut found = 0;
    let mut disagree = 0;
    for p in &planted {
        let query = &corpus[p.query];
        let hits: Vec<usize> = index.retrieve(query, DEFAULT_K).iter().map(|h| h.index).collect();
        found += usize::from(hits.contains(&p.duplicate));
        let brute = brute_force_cosine(&corpus, query);
        let worst_hit = hits.iter().map(|&i| brute[i]).fold(f64::INFINITY, f64::min);
        let best_miss = (0..corpus.len())
            .filter(|i| corpus[*i] != *query && !hits.contains(i))
            .map(|i| brute[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let scores = index.scores(query);
        let close = scores.iter().zip(&brute).all(|(a, b)| (a - b).abs() < 1e-9);
        if hits.len() != DEFAULT_K || worst_hit < best_miss - 1e-12 || !close {
            disagree += 1;
        }
    }
    (found, planted.len(), disagree)
}

pub fn determinism_examples() -> Vec<QaExample> {
    tabrobust::jsonl::read_examples(&fixture("determinism_examples.jsonl")).unwrap()
}

/// Serialized pair files for every operator over the frozen examples at
/// seed 42, as (type, bytes). Column adding draws from the retrieval corpus.
pub fn perturb_outputs(exec: tabrobust::Execution) -> Vec<(tabrobust::PerturbationType, Vec<u8>)> {
    use tabrobust::jsonl::serialize_dataset;
    use tabrobust::perturb::{perturb_dataset, OperatorRegistry, Resources};
    use tabrobust::retrieval::index_corpus;
    use tabrobust::Dataset;

    let examples = determinism_examples();
    let (corpus, _) = retrieval_fixture();
    let res = Resources::with_defaults().with_corpus(index_corpus(corpus).unwrap());
    let registry = OperatorRegistry::default();
    tabrobust::PerturbationType::ALL
        .into_iter()
        .map(|kind| {
            let pairs = perturb_dataset(&examples, &spec_for(kind, 42), &registry, &res, exec)
                .unwrap()
                .into_iter()
                .filter_map(|o| o.into_pair())
                .collect();
            (kind, serialize_dataset(&Dataset::pairs(kind.as_str(), pairs)))
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// Digests of [`perturb_outputs`] frozen on the build machine. Matching
/// them on another machine shows the output does not depend on the
/// platform.
pub fn frozen_digests() -> std::collections::BTreeMap<String, String> {
    let text = std::fs::read_to_string(fixture("perturb_digests.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// How often each permutation comes out of `draws` seeded shuffles of
/// `table`, whose row keys (first column) or header names are 0..n.
pub fn shuffle_permutations(
    kind: tabrobust::PerturbationType,
    table: &Table,
    draws: usize,
) -> std::collections::BTreeMap<Vec<usize>, usize> {
    use tabrobust::perturb::{apply_perturbation, OperatorRegistry, Resources};
    use tabrobust::rng::derive_seed;

    let registry = OperatorRegistry::default();
    let res = Resources::default();
    let ex = QaExample::new("u", table.clone(), "which row holds b?", vec!["b".into()]);
    let mut counts = std::collections::BTreeMap::new();
    for s in 0..draws {
        let spec = tabrobust::PerturbationSpec::new(kind, derive_seed(5, &s.to_string()));
        let post = apply_perturbation(&ex, &spec, &registry, &res).unwrap().into_pair().unwrap().post.table;
        let perm: Vec<usize> = match kind {
            tabrobust::PerturbationType::RowShuffle => post.rows.iter().map(|r| r[0].parse().unwrap()).collect(),
            _ => post.header.iter().map(|h| h.parse().unwrap()).collect(),
        };
        *counts.entry(perm).or_insert(0) += 1;
    }
    counts
}

/// Runs every demonstration through generation against the gold-echo
/// client; returns (accepted, total, network requests).
pub fn gold_echo_acceptance(seed: u64) -> (usize, usize, usize) {
    use tabrobust::augment::{demo_cases, generate, gold_echo_client, GenerationConfig, GenerationContext};
    use tabrobust::llm::LlmClient as _;
    use tabrobust::resources::demonstration_pool;

    let pool = demonstration_pool();
    let config = GenerationConfig {
        seed,
        ..Default::default()
    };
    let client = gold_echo_client(&pool, seed).unwrap();
    let cases = demo_cases(&pool);
    let accepted = cases
        .iter()
        .filter(|c| {
            let ctx = GenerationContext {
                candidate_tables: c.candidate_table.as_slice(),
            };
            let res = generate(c.task, &c.example, &pool, &client, &config, ctx).unwrap();
            res.pairs.len() == 1
        })
        .count();
    (accepted, cases.len(), client.network_requests())
}
