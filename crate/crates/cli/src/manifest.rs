use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::{resource, CliResult};

/// What a run did, written next to its output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    /// Every resolved option, defaults included.
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    /// Records produced per perturbation type.
    pub counts: BTreeMap<String, usize>,
    /// Skip reasons or per-round outcome classes with their counts.
    pub tallies: BTreeMap<String, usize>,
    /// Requests that left the process, for commands that talk to an LLM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_requests: Option<usize>,
    pub wall_time_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            counts: BTreeMap::new(),
            tallies: BTreeMap::new(),
            network_requests: None,
            wall_time_secs: 0.0,
        }
    }

    pub fn finish(mut self, started: Instant, path: &Path) -> CliResult<()> {
        self.wall_time_secs = started.elapsed().as_secs_f64();
        self.outputs.insert("manifest".into(), path.to_path_buf());
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| resource(format!("{}: {e}", path.display())))
    }
}

/// `out.jsonl` gets `out.manifest.json` unless a path is given.
pub fn manifest_path(explicit: Option<&Path>, out: &Path) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => out.with_extension("manifest.json"),
    }
}
