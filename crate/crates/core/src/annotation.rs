//! Model-in-the-loop question annotation.
//!
//! A session walks a dataset one example at a time. For the served example
//! the model's answer on the original question is computed once and cached;
//! each attempt re-asks the model with the annotator's question and reports
//! whether the answer flipped. Accepted questions become human-provenance
//! pairs. Every accept and skip is appended to a per-session log so a
//! crashed session can be resumed.
//!
//! Calls on one session are serialized by a per-session lock; distinct
//! sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adapters::{AdapterError, FirstRowAdapter, GoldAdapter, HttpAdapter, ModelAdapter};
use crate::augment::ParaphraseLevel;
use crate::jsonl::{read_examples, write_records};
use crate::metrics::{exact_match, predictions_agree};
use crate::model::{PerturbationSpec, PerturbedPair, Provenance, QaExample, Table};
use crate::text::normalize_question;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub dataset: PathBuf,
    /// `gold`, `first_row`, an `http(s)://` endpoint, or a name registered
    /// with the resolver.
    pub adapter: String,
    pub level: ParaphraseLevel,
    #[serde(default = "yes")]
    pub require_flip: bool,
    #[serde(default = "yes")]
    pub show_gold: bool,
}

impl SessionConfig {
    pub fn new(dataset: impl Into<PathBuf>, adapter: impl Into<String>, level: ParaphraseLevel) -> Self {
        SessionConfig {
            dataset: dataset.into(),
            adapter: adapter.into(),
            level,
            require_flip: true,
            show_gold: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("adapter: {0}")]
    Adapter(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` is closed")]
    Closed(String),
    #[error("item `{0}` is not the item being served")]
    UnknownItem(String),
    #[error("unchanged: the question equals the original")]
    Unchanged,
    #[error("no attempt with this question for item `{0}`")]
    NoAttempt(String),
    #[error("the attempt did not change the prediction and the session requires a flip")]
    NotFlipped,
    #[error("session log: {0}")]
    Persist(String),
}

impl AnnotationError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::Dataset(_) => "dataset_error",
            AnnotationError::Adapter(_) => "adapter_error",
            AnnotationError::UnknownSession(_) => "unknown_session",
            AnnotationError::Closed(_) => "session_closed",
            AnnotationError::UnknownItem(_) => "unknown_item",
            AnnotationError::Unchanged => "unchanged",
            AnnotationError::NoAttempt(_) => "no_attempt",
            AnnotationError::NotFlipped => "not_flipped",
            AnnotationError::Persist(_) => "persist_error",
        }
    }
}

impl From<AdapterError> for AnnotationError {
    fn from(e: AdapterError) -> Self {
        AnnotationError::Adapter(e.to_string())
    }
}

/// Turns an adapter reference into an adapter for a loaded dataset.
pub trait AdapterResolver: Send + Sync {
    fn resolve(&self, reference: &str, examples: &[QaExample]) -> Result<Arc<dyn ModelAdapter>, AnnotationError>;
}

/// Resolves `gold`, `first_row`, HTTP endpoints, and registered names.
pub struct DefaultResolver {
    pub timeout: Duration,
    pub max_in_flight: usize,
    named: BTreeMap<String, Arc<dyn ModelAdapter>>,
}

impl Default for DefaultResolver {
    fn default() -> Self {
        DefaultResolver {
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
            named: BTreeMap::new(),
        }
    }
}

impl DefaultResolver {
    pub fn register(mut self, name: &str, adapter: Arc<dyn ModelAdapter>) -> Self {
        self.named.insert(name.to_string(), adapter);
        self
    }
}

impl AdapterResolver for DefaultResolver {
    fn resolve(&self, reference: &str, examples: &[QaExample]) -> Result<Arc<dyn ModelAdapter>, AnnotationError> {
        if let Some(a) = self.named.get(reference) {
            return Ok(a.clone());
        }
        match reference {
            "gold" => Ok(Arc::new(GoldAdapter::from_examples(examples))),
            "first_row" => Ok(Arc::new(FirstRowAdapter)),
            r if r.starts_with("http://") || r.starts_with("https://") => {
                Ok(Arc::new(HttpAdapter::new(r, self.timeout, self.max_in_flight)?))
            }
            other => Err(AnnotationError::Adapter(format!("unknown adapter `{other}`"))),
        }
    }
}

/// An example as shown to the annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedItem {
    pub item_id: String,
    pub table: Table,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<String>>,
    pub original_prediction: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptResult {
    pub prediction: Vec<String>,
    pub flipped: bool,
    pub matches_gold: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEvent {
    Create { session_id: String, config: SessionConfig },
    Accept { item_id: String, pair: Box<PerturbedPair> },
    Skip { item_id: String },
    Close,
}

struct Session {
    id: String,
    config: SessionConfig,
    examples: Vec<QaExample>,
    adapter: Arc<dyn ModelAdapter>,
    cursor: usize,
    original: HashMap<usize, Vec<String>>,
    /// Attempts on the current item, keyed by normalized question.
    attempts: HashMap<String, AttemptResult>,
    accepted: Vec<PerturbedPair>,
    closed: bool,
    log: Option<File>,
}

impl Session {
    fn append(&mut self, event: &LogEvent) -> Result<(), AnnotationError> {
        if let Some(f) = &mut self.log {
            let mut line = serde_json::to_vec(event).expect("events serialize");
            line.push(b'\n');
            f.write_all(&line)
                .and_then(|_| f.sync_data())
                .map_err(|e| AnnotationError::Persist(e.to_string()))?;
        }
        Ok(())
    }

    fn open(&self) -> Result<(), AnnotationError> {
        if self.closed {
            Err(AnnotationError::Closed(self.id.clone()))
        } else {
            Ok(())
        }
    }

    fn current(&self, item_id: &str) -> Result<&QaExample, AnnotationError> {
        match self.examples.get(self.cursor) {
            Some(ex) if ex.id == item_id && self.original.contains_key(&self.cursor) => Ok(ex),
            _ => Err(AnnotationError::UnknownItem(item_id.to_string())),
        }
    }

    fn advance(&mut self) {
        self.original.remove(&self.cursor);
        self.attempts.clear();
        self.cursor += 1;
    }
}

pub struct AnnotationService {
    resolver: Arc<dyn AdapterResolver>,
    state_dir: Option<PathBuf>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

fn load_examples(path: &Path) -> Result<Vec<QaExample>, AnnotationError> {
    read_examples(path).map_err(|e| AnnotationError::Dataset(format!("{}: {e}", path.display())))
}

impl AnnotationService {
    /// Sessions log to `state_dir/<session id>.jsonl` when a directory is
    /// given, and live in memory only otherwise.
    pub fn new(resolver: Arc<dyn AdapterResolver>, state_dir: Option<PathBuf>) -> Self {
        AnnotationService {
            resolver,
            state_dir,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.state_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, AnnotationError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| AnnotationError::UnknownSession(id.to_string()))
    }

    fn open_log(&self, id: &str, create: bool) -> Result<Option<File>, AnnotationError> {
        let Some(path) = self.log_path(id) else {
            return Ok(None);
        };
        let mut opts = OpenOptions::new();
        opts.append(true);
        if create {
            opts.create_new(true);
        }
        opts.open(&path)
            .map(Some)
            .map_err(|e| AnnotationError::Persist(format!("{}: {e}", path.display())))
    }

    pub fn create_session(&self, config: SessionConfig) -> Result<String, AnnotationError> {
        let examples = load_examples(&config.dataset)?;
        let adapter = self.resolver.resolve(&config.adapter, &examples)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut session = Session {
            id: id.clone(),
            config: config.clone(),
            examples,
            adapter,
            cursor: 0,
            original: HashMap::new(),
            attempts: HashMap::new(),
            accepted: Vec::new(),
            closed: false,
            log: self.open_log(&id, true)?,
        };
        session.append(&LogEvent::Create {
            session_id: id.clone(),
            config,
        })?;
        self.sessions
            .lock()
            .expect("session map lock")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Rebuilds a session from its log and registers it again.
    pub fn resume(&self, id: &str) -> Result<(), AnnotationError> {
        let path = self
            .log_path(id)
            .ok_or_else(|| AnnotationError::Persist("no state directory configured".into()))?;
        let f = File::open(&path).map_err(|_| AnnotationError::UnknownSession(id.to_string()))?;
        let mut events = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| AnnotationError::Persist(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogEvent>(&line) {
                Ok(e) => events.push(e),
                // A torn final line from a crash is ignored.
                Err(_) => break,
            }
        }
        let Some(LogEvent::Create { config, .. }) = events.first().cloned() else {
            return Err(AnnotationError::Persist(format!("{}: missing create event", path.display())));
        };
        let examples = load_examples(&config.dataset)?;
        let adapter = self.resolver.resolve(&config.adapter, &examples)?;
        let mut session = Session {
            id: id.to_string(),
            config,
            examples,
            adapter,
            cursor: 0,
            original: HashMap::new(),
            attempts: HashMap::new(),
            accepted: Vec::new(),
            closed: false,
            log: None,
        };
        for e in events.into_iter().skip(1) {
            match e {
                LogEvent::Accept { pair, .. } => {
                    session.accepted.push(*pair);
                    session.cursor += 1;
                }
                LogEvent::Skip { .. } => session.cursor += 1,
                LogEvent::Close => session.closed = true,
                LogEvent::Create { .. } => {}
            }
        }
        session.log = self.open_log(id, false)?;
        self.sessions
            .lock()
            .expect("session map lock")
            .insert(id.to_string(), Arc::new(Mutex::new(session)));
        Ok(())
    }

    /// The item under the cursor, or `None` once the dataset is exhausted.
    /// Repeated calls return the same item until it is accepted or skipped.
    pub fn next_item(&self, id: &str) -> Result<Option<ServedItem>, AnnotationError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.open()?;
        let cursor = s.cursor;
        let Some(ex) = s.examples.get(cursor).cloned() else {
            return Ok(None);
        };
        let prediction = match s.original.get(&cursor) {
            Some(p) => p.clone(),
            None => {
                let p = s.adapter.answer(&ex.table, &ex.question)?;
                s.original.insert(cursor, p.clone());
                p
            }
        };
        Ok(Some(ServedItem {
            item_id: ex.id,
            table: ex.table,
            question: ex.question,
            answers: s.config.show_gold.then_some(ex.answers),
            original_prediction: prediction,
        }))
    }

    pub fn submit_attempt(&self, id: &str, item_id: &str, question: &str) -> Result<AttemptResult, AnnotationError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.open()?;
        let ex = s.current(item_id)?.clone();
        let key = normalize_question(question);
        if key == normalize_question(&ex.question) {
            return Err(AnnotationError::Unchanged);
        }
        let prediction = s.adapter.answer(&ex.table, question)?;
        let original = &s.original[&s.cursor];
        let result = AttemptResult {
            flipped: !predictions_agree(&prediction, original),
            matches_gold: exact_match(&prediction, &ex.answers),
            prediction,
        };
        s.attempts.insert(key, result.clone());
        Ok(result)
    }

    /// Stores the pair for an attempted question and advances the cursor.
    pub fn accept(&self, id: &str, item_id: &str, question: &str) -> Result<PerturbedPair, AnnotationError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.open()?;
        let ex = s.current(item_id)?.clone();
        let attempt = s
            .attempts
            .get(&normalize_question(question))
            .cloned()
            .ok_or_else(|| AnnotationError::NoAttempt(item_id.to_string()))?;
        if s.config.require_flip && !attempt.flipped {
            return Err(AnnotationError::NotFlipped);
        }
        let mut spec = PerturbationSpec::new(s.config.level.perturbation_type(), 0);
        spec.params.insert("session_id".into(), json!(s.id));
        spec.params.insert("flipped".into(), json!(attempt.flipped));
        spec.params.insert("original_prediction".into(), json!(s.original[&s.cursor]));
        spec.params.insert("prediction".into(), json!(attempt.prediction));
        let mut post = ex.clone();
        post.question = question.trim().to_string();
        let pair = PerturbedPair {
            id: ex.id.clone(),
            perturbation: spec,
            provenance: Provenance::Human,
            pre: ex,
            post,
        };
        s.append(&LogEvent::Accept {
            item_id: item_id.to_string(),
            pair: Box::new(pair.clone()),
        })?;
        s.accepted.push(pair.clone());
        s.advance();
        Ok(pair)
    }

    pub fn skip(&self, id: &str, item_id: &str) -> Result<(), AnnotationError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.open()?;
        s.current(item_id)?;
        s.append(&LogEvent::Skip {
            item_id: item_id.to_string(),
        })?;
        s.advance();
        Ok(())
    }

    /// Accepted pairs as JSONL, in acceptance order.
    pub fn export(&self, id: &str) -> Result<Vec<u8>, AnnotationError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        let mut buf = Vec::new();
        write_records(&mut buf, &s.accepted).expect("writing to a Vec cannot fail");
        Ok(buf)
    }

    pub fn close(&self, id: &str) -> Result<(), AnnotationError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        if !s.closed {
            s.append(&LogEvent::Close)?;
            s.closed = true;
        }
        Ok(())
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("session map lock").keys().cloned().collect();
        ids.sort();
        ids
    }
}
