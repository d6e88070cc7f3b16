use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tabrobust::adapters::{
    predict_examples, predict_pairs, read_predictions, FirstRowAdapter, GoldAdapter, HttpAdapter, LlmQaAdapter,
    ModelAdapter, PredictionError, PredictionSet,
};
use tabrobust::annotation::{AnnotationService, DefaultResolver, SessionConfig};
use tabrobust::augment::{generate as run_generation, GenerationConfig, GenerationContext, GenerationResult, Task};
use tabrobust::jsonl::{read_examples, read_pairs, read_table_corpus, serialize_dataset, write_records};
use tabrobust::llm::{FixtureClient, HttpLlmClient, LlmClient, LlmError, RecordingClient};
use tabrobust::metrics::{build_report, merge_reports, render_merged, Format, ReportOptions, RobustnessReport};
use tabrobust::perturb::{perturb_dataset, skip_tally, OperatorRegistry, PerturbError, Resources};
use tabrobust::resources::{demonstration_pool, qa_demos};
use tabrobust::retrieval::{index_corpus, TableIndex};
use tabrobust::{Dataset, Execution, PerturbationSpec, PerturbationType, PerturbedPair, QaExample};

use crate::error::{dataset_error, invalid, resource, CliError, CliResult};
use crate::manifest::{manifest_path, RunManifest};
use crate::{EvaluateArgs, GenerateArgs, LlmArgs, Mock, PerturbArgs, ReportArgs, ServeArgs};

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| resource(format!("{}: {e}", path.display())))
}

/// Refuses to overwrite an input.
fn check_distinct(input: &Path, out: &Path) -> CliResult<()> {
    let same = match (fs::canonicalize(input), fs::canonicalize(out)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(invalid(format!("{} is both input and output", out.display())));
    }
    Ok(())
}

/// `key=value`; JSON numbers and booleans keep their type.
fn parse_param(raw: &str) -> CliResult<(String, Value)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| invalid(format!("parameter `{raw}` is not key=value")))?;
    let value = match serde_json::from_str::<Value>(v) {
        Ok(x @ (Value::Number(_) | Value::Bool(_))) => x,
        _ => Value::String(v.to_string()),
    };
    Ok((k.trim().to_string(), value))
}

fn load_corpus(path: &Path) -> CliResult<TableIndex> {
    let tables = read_table_corpus(path).map_err(|e| dataset_error(path, e))?;
    index_corpus(tables).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn uses_corpus(spec: &PerturbationSpec) -> bool {
    match spec.kind {
        PerturbationType::ColAdding => true,
        PerturbationType::Mix => spec
            .mix_constituents()
            .is_ok_and(|parts| parts.iter().any(|p| p.kind == PerturbationType::ColAdding)),
        _ => false,
    }
}

pub fn perturb(a: &PerturbArgs, exec: Execution) -> CliResult<()> {
    let started = Instant::now();
    let kind: PerturbationType = a.kind.parse().map_err(invalid)?;
    let mut spec = PerturbationSpec::new(kind, a.seed);
    for raw in &a.params {
        let (k, v) = parse_param(raw)?;
        spec.params.insert(k, v);
    }
    if let Some(v) = spec.validate().into_iter().next() {
        return Err(invalid(v));
    }
    check_distinct(&a.input, &a.out)?;
    let examples = read_examples(&a.input).map_err(|e| dataset_error(&a.input, e))?;
    let mut res = Resources::with_defaults();
    match &a.corpus {
        Some(path) => res = res.with_corpus(load_corpus(path)?),
        None if uses_corpus(&spec) => return Err(resource(format!("{kind} needs a table corpus (--corpus)"))),
        None => {}
    }
    let outcomes = perturb_dataset(&examples, &spec, &OperatorRegistry::default(), &res, exec).map_err(|e| match e {
        PerturbError::MissingResource { .. } => resource(e),
        other => invalid(other),
    })?;
    let tally = skip_tally(&outcomes);
    let pairs: Vec<PerturbedPair> = outcomes.into_iter().filter_map(|o| o.into_pair()).collect();
    let name = a.out.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned());
    write_file(&a.out, &serialize_dataset(&Dataset::pairs(name, pairs.clone())))?;

    println!("{kind}: {} pairs, {} skipped", pairs.len(), examples.len() - pairs.len());
    for (reason, n) in &tally {
        println!("  skipped {n}: {reason}");
    }
    let mut m = RunManifest::new("perturb", serde_json::to_value(a).expect("args serialize"));
    m.config["resolved_spec"] = serde_json::to_value(&spec).expect("spec serializes");
    m.seeds.insert("seed".into(), a.seed);
    m.inputs.insert("input".into(), a.input.clone());
    if let Some(c) = &a.corpus {
        m.inputs.insert("corpus".into(), c.clone());
    }
    m.outputs.insert("pairs".into(), a.out.clone());
    m.counts.insert(kind.to_string(), pairs.len());
    m.counts.insert("skipped".into(), examples.len() - pairs.len());
    m.tallies = tally;
    m.finish(started, &manifest_path(a.manifest.as_deref(), &a.out))
}

/// The client behind `--fixtures` or `--live`, plus the recorder to flush.
struct LlmHandle {
    client: Arc<dyn LlmClient>,
    recorder: Option<Arc<RecordingClient<HttpLlmClient>>>,
}

fn llm_client(a: &LlmArgs) -> CliResult<LlmHandle> {
    if let Some(path) = &a.fixtures {
        let client = FixtureClient::load(path).map_err(|e| match e {
            LlmError::Fixture(m) if m.contains("No such file") => resource(format!("{}: {m}", path.display())),
            other => invalid(format!("{}: {other}", path.display())),
        })?;
        return Ok(LlmHandle {
            client: Arc::new(client),
            recorder: None,
        });
    }
    if !a.live {
        return Err(invalid("choose --fixtures <file> for replay or --live for the completion API"));
    }
    let http = HttpLlmClient::from_env(Duration::from_secs(a.timeout_secs), a.max_in_flight).map_err(resource)?;
    if a.record.is_some() {
        let rec = Arc::new(RecordingClient::new(http));
        return Ok(LlmHandle {
            client: rec.clone(),
            recorder: Some(rec),
        });
    }
    Ok(LlmHandle {
        client: Arc::new(http),
        recorder: None,
    })
}

fn tasks_for(a: &GenerateArgs) -> CliResult<Vec<Task>> {
    if let Some(c) = &a.category {
        return Ok(vec![Task::Paraphrase(c.parse().map_err(invalid)?)]);
    }
    let raw = a.kind.as_deref().unwrap_or_default();
    let kind: PerturbationType = raw.parse().map_err(invalid)?;
    let tasks = Task::for_type(kind);
    if tasks.is_empty() {
        return Err(invalid(format!("{kind} is not generated by prompting; use `perturb`")));
    }
    Ok(tasks)
}

/// Runs every task on one example; pair ids continue `<id>#1, <id>#2, ...`
/// across tasks.
fn generate_one(
    ex: &QaExample,
    tasks: &[Task],
    client: &dyn LlmClient,
    config: &GenerationConfig,
    corpus: Option<&TableIndex>,
) -> CliResult<GenerationResult> {
    let pool = demonstration_pool();
    let mut all = GenerationResult::default();
    for &task in tasks {
        let candidates: Vec<_> = match (task, corpus) {
            (Task::ColAdding, Some(index)) => index.retrieve(&ex.table, 3).into_iter().map(|h| h.table.clone()).collect(),
            _ => Vec::new(),
        };
        let ctx = GenerationContext {
            candidate_tables: &candidates,
        };
        let res = run_generation(task, ex, &pool, client, config, ctx).map_err(|e| invalid(format!("{}: {e}", ex.id)))?;
        for mut p in res.pairs {
            let id = format!("{}#{}", ex.id, all.pairs.len() + 1);
            p.id.clone_from(&id);
            p.pre.id.clone_from(&id);
            p.post.id = id;
            all.pairs.push(p);
        }
        all.rounds.extend(res.rounds);
    }
    Ok(all)
}

pub fn generate(a: &GenerateArgs, exec: Execution) -> CliResult<()> {
    let started = Instant::now();
    let tasks = tasks_for(a)?;
    let mut config = GenerationConfig {
        rounds: a.rounds,
        temperature: a.temperature,
        max_candidates: a.max_candidates,
        seed: a.seed,
        ..GenerationConfig::default()
    };
    if let Some(m) = &a.text_model {
        config.models.insert("text".into(), m.clone());
    }
    if let Some(m) = &a.code_model {
        config.models.insert("code".into(), m.clone());
    }
    config.validate().map_err(invalid)?;
    check_distinct(&a.input, &a.out)?;
    let examples = read_examples(&a.input).map_err(|e| dataset_error(&a.input, e))?;
    let corpus = match &a.corpus {
        Some(p) => Some(load_corpus(p)?),
        None if tasks.contains(&Task::ColAdding) => {
            return Err(resource("col_adding needs a table corpus (--corpus)"));
        }
        None => None,
    };
    let llm = llm_client(&a.llm)?;
    let results = exec.try_map(&examples, |ex| generate_one(ex, &tasks, llm.client.as_ref(), &config, corpus.as_ref()))?;

    let mut pairs = Vec::new();
    let mut rounds = Vec::new();
    let mut tallies: BTreeMap<String, usize> = BTreeMap::new();
    for r in results {
        for (class, n) in r.tally() {
            *tallies.entry(class.to_string()).or_insert(0) += n;
        }
        pairs.extend(r.pairs);
        rounds.extend(r.rounds);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &pairs {
        *counts.entry(p.perturbation.kind.to_string()).or_insert(0) += 1;
    }
    let name = a.out.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned());
    write_file(&a.out, &serialize_dataset(&Dataset::pairs(name, pairs.clone())))?;
    if let Some(path) = &a.rounds_log {
        let mut buf = Vec::new();
        write_records(&mut buf, &rounds).expect("writing to a Vec cannot fail");
        write_file(path, &buf)?;
    }
    if let (Some(rec), Some(path)) = (&llm.recorder, &a.llm.record) {
        let mut buf = Vec::new();
        rec.write_fixtures(&mut buf).expect("writing to a Vec cannot fail");
        write_file(path, &buf)?;
    }

    let sent = llm.client.network_requests();
    println!("{} pairs from {} examples, {} rounds", pairs.len(), examples.len(), rounds.len());
    for (class, n) in &tallies {
        println!("  {class}: {n}");
    }
    println!("network requests: {sent}");

    let mut m = RunManifest::new("generate", serde_json::to_value(a).expect("args serialize"));
    m.config["generation"] = serde_json::to_value(&config).expect("config serializes");
    m.config["tasks"] = json!(tasks.iter().map(|t| t.name()).collect::<Vec<_>>());
    m.seeds.insert("seed".into(), a.seed);
    m.inputs.insert("input".into(), a.input.clone());
    if let Some(p) = &a.corpus {
        m.inputs.insert("corpus".into(), p.clone());
    }
    if let Some(p) = &a.llm.fixtures {
        m.inputs.insert("fixtures".into(), p.clone());
    }
    m.outputs.insert("pairs".into(), a.out.clone());
    if let Some(p) = &a.rounds_log {
        m.outputs.insert("rounds".into(), p.clone());
    }
    if let Some(p) = &a.llm.record {
        m.outputs.insert("fixtures".into(), p.clone());
    }
    m.counts = counts;
    m.tallies = tallies;
    m.network_requests = Some(sent);
    m.finish(started, &manifest_path(a.manifest.as_deref(), &a.out))
}

fn prediction_error(path: &Path, e: PredictionError) -> CliError {
    match e {
        PredictionError::Io(_) => resource(format!("{}: {e}", path.display())),
        other => invalid(format!("{}: {other}", path.display())),
    }
}

fn adapter_for(a: &EvaluateArgs, pairs: &[PerturbedPair], dev: &[QaExample]) -> CliResult<Arc<dyn ModelAdapter>> {
    if let Some(url) = &a.endpoint {
        let adapter = HttpAdapter::new(url, Duration::from_secs(a.llm_client.timeout_secs), a.llm_client.max_in_flight).map_err(resource)?;
        return Ok(Arc::new(adapter));
    }
    if let Some(model) = &a.llm {
        let handle = llm_client(&a.llm_client)?;
        let adapter = LlmQaAdapter::new(handle.client, model, qa_demos()).map_err(invalid)?;
        return Ok(Arc::new(adapter));
    }
    match a.mock {
        Some(Mock::Gold) => {
            let mut g = GoldAdapter::from_pairs(pairs);
            for ex in dev {
                g.add(ex);
            }
            Ok(Arc::new(g))
        }
        Some(Mock::FirstRow) => Ok(Arc::new(FirstRowAdapter)),
        None => Err(invalid("give one of --predictions, --endpoint, --mock, or --llm")),
    }
}

pub fn evaluate(a: &EvaluateArgs, exec: Execution) -> CliResult<()> {
    let started = Instant::now();
    let format: Format = a.format.parse().map_err(invalid)?;
    let pairs = read_pairs(&a.pairs).map_err(|e| dataset_error(&a.pairs, e))?;
    let dev = match &a.dev {
        Some(p) => read_examples(p).map_err(|e| dataset_error(p, e))?,
        None => Vec::new(),
    };
    let (preds, dev_preds, source) = if let Some(path) = &a.predictions {
        let preds = read_predictions(path).map_err(|e| prediction_error(path, e))?;
        let dev_preds = match &a.dev_predictions {
            Some(p) => read_predictions(p).map_err(|e| prediction_error(p, e))?,
            None if a.dev.is_some() => return Err(invalid("--dev with --predictions needs --dev-predictions")),
            None => PredictionSet::default(),
        };
        let stem = path.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned());
        (preds, dev_preds, stem)
    } else {
        let adapter = adapter_for(a, &pairs, &dev)?;
        let preds = predict_pairs(adapter.as_ref(), &pairs, exec).map_err(resource)?;
        let dev_preds = predict_examples(adapter.as_ref(), &dev, exec).map_err(resource)?;
        (preds, dev_preds, adapter.name().to_string())
    };
    let model = a.model.clone().unwrap_or(source);
    let opts = ReportOptions {
        sequence_averaging: a.sequence_averaging,
        exec,
    };
    let dev_arg = a.dev.is_some().then_some((dev.as_slice(), &dev_preds));
    let report = build_report(&model, &pairs, &preds, dev_arg, opts).map_err(invalid)?;

    let gaps = report.coverage_gaps();
    if !gaps.is_empty() && !a.allow_missing {
        return Err(invalid(format!("missing predictions (pass --allow-missing to score them as wrong): {}", gaps.join("; "))));
    }
    for w in report.check_consistency() {
        log::warn!("{w}");
    }
    print!("{}", report.render(format));
    if let Some(path) = &a.out_report {
        write_file(path, report.render(Format::Json).as_bytes())?;
    }
    if let Some(path) = &a.save_predictions {
        let mut buf = Vec::new();
        write_records(&mut buf, &preds.records()).expect("writing to a Vec cannot fail");
        write_file(path, &buf)?;
    }
    if let Some(out) = &a.out_report {
        let mut m = RunManifest::new("evaluate", serde_json::to_value(a).expect("args serialize"));
        m.inputs.insert("pairs".into(), a.pairs.clone());
        if let Some(p) = &a.predictions {
            m.inputs.insert("predictions".into(), p.clone());
        }
        if let Some(p) = &a.dev {
            m.inputs.insert("dev".into(), p.clone());
        }
        m.outputs.insert("report".into(), out.clone());
        for r in &report.rows {
            m.counts.insert(r.perturbation.clone(), r.n);
        }
        for g in &gaps {
            if let Some((kind, _)) = g.split_once(':') {
                m.tallies.insert(format!("{kind} coverage gap"), 1);
            }
        }
        m.finish(started, &manifest_path(None, out))?;
    }
    Ok(())
}

fn read_report(path: &Path) -> CliResult<RobustnessReport> {
    let text = fs::read_to_string(path).map_err(|e| resource(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: not a report: {e}", path.display())))
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    let started = Instant::now();
    let format: Format = a.format.parse().map_err(invalid)?;
    let reports = a.reports.iter().map(|p| read_report(p)).collect::<CliResult<Vec<_>>>()?;
    let text = if a.merge {
        let merged = merge_reports(&reports).map_err(invalid)?;
        render_merged(&merged, format)
    } else {
        reports.iter().map(|r| r.render(format)).collect::<Vec<_>>().join("\n")
    };
    match &a.out {
        Some(out) => {
            write_file(out, text.as_bytes())?;
            let mut m = RunManifest::new("report", serde_json::to_value(a).expect("args serialize"));
            for (i, p) in a.reports.iter().enumerate() {
                m.inputs.insert(format!("report{i}"), p.clone());
            }
            m.outputs.insert("table".into(), out.clone());
            for r in &reports {
                m.counts.insert(r.model.clone(), r.rows.len());
            }
            m.finish(started, &out.with_extension("manifest.json"))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(resource)
        }
    }
}

pub fn serve(a: &ServeArgs) -> CliResult<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(resource)?;
    if let Some(dir) = &a.state_dir {
        fs::create_dir_all(dir).map_err(|e| resource(format!("{}: {e}", dir.display())))?;
    }
    let service = Arc::new(AnnotationService::new(Arc::new(DefaultResolver::default()), a.state_dir.clone()));
    if let Some(dir) = &a.state_dir {
        let resumed = tabrobust_server::resume_all(&service, dir).map_err(resource)?;
        for id in resumed {
            println!("resumed session {id}");
        }
    }
    if let Some(dataset) = &a.dataset {
        let level = serde_json::from_value(Value::String(a.level.clone()))
            .map_err(|_| invalid(format!("level must be word or sentence, got `{}`", a.level)))?;
        let mut config = SessionConfig::new(dataset, &a.adapter, level);
        config.require_flip = !a.allow_unflipped;
        let id = service.create_session(config).map_err(|e| match e.code() {
            "dataset_error" | "adapter_error" => resource(e),
            _ => invalid(e),
        })?;
        println!("session {id}");
    }
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| resource(format!("cannot listen on {}:{}: {e}", a.host, a.port)))?;
        let addr = listener.local_addr().map_err(resource)?;
        println!("listening on http://{addr}");
        std::io::stdout().flush().map_err(resource)?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        tabrobust_server::serve(listener, service, shutdown).await.map_err(resource)
    })
}
