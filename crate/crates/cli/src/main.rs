mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Perturb table QA datasets, generate adversarial examples with an LLM,
/// score robustness, and serve the annotation backend.
#[derive(Parser, Debug)]
#[command(name = "tabrobust", version)]
struct Cli {
    /// Run every per-example loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply a rule-based or heuristic perturbation to every example.
    Perturb(PerturbArgs),
    /// Generate perturbed pairs by prompting an LLM with demonstrations.
    Generate(GenerateArgs),
    /// Score a pair set and print a robustness report.
    Evaluate(EvaluateArgs),
    /// Run the annotation service until interrupted.
    Serve(ServeArgs),
    /// Render saved reports, or merge several into one table.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PerturbArgs {
    /// Examples JSONL.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "type")]
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Operator parameters as key=value; values that parse as JSON scalars
    /// are stored as such.
    #[arg(long = "params", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Table corpus JSONL for column adding.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the output path with a `.manifest.json` extension.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LlmArgs {
    /// Replay canned completions from this fixture JSONL; no network.
    #[arg(long, conflicts_with = "live")]
    pub fixtures: Option<PathBuf>,
    /// Call the completion API named by LLM_API_BASE with LLM_API_KEY.
    #[arg(long)]
    pub live: bool,
    /// In live mode, save every completion as a replayable fixture.
    #[arg(long, requires = "live")]
    pub record: Option<PathBuf>,
    /// Per-request timeout for LLM and model endpoints.
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    /// Concurrent requests to LLM and model endpoints.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Perturbation type; question types run every category of their level.
    #[arg(long = "type", required_unless_present = "category", conflicts_with = "category")]
    pub kind: Option<String>,
    /// A single paraphrase category, e.g. `reasoning_synonym`.
    #[arg(long)]
    pub category: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub rounds: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1)]
    pub max_candidates: u32,
    /// Override the model for the "text" role.
    #[arg(long)]
    pub text_model: Option<String>,
    /// Override the model for the "code" role.
    #[arg(long)]
    pub code_model: Option<String>,
    /// Table corpus JSONL; column adding draws candidate tables from it.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write every round's outcome as JSONL.
    #[arg(long)]
    pub rounds_log: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub llm: LlmArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mock {
    Gold,
    #[value(name = "first_row")]
    FirstRow,
}

#[derive(Args, Debug, Serialize)]
pub struct EvaluateArgs {
    /// Pair JSONL.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Prediction JSONL with `pre` and `post` records.
    #[arg(long, group = "source")]
    pub predictions: Option<PathBuf>,
    /// A model served over HTTP.
    #[arg(long, group = "source")]
    pub endpoint: Option<String>,
    #[arg(long, value_enum, group = "source")]
    pub mock: Option<Mock>,
    /// Answer with few-shot reasoning prompts to this LLM.
    #[arg(long, group = "source")]
    pub llm: Option<String>,
    /// Original development examples to report next to the pair rows.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Predictions for `--dev` when scoring from files (pre side).
    #[arg(long, requires = "dev")]
    pub dev_predictions: Option<PathBuf>,
    /// Model name in the report; defaults to the source.
    #[arg(long)]
    pub model: Option<String>,
    /// Average accuracy per question sequence.
    #[arg(long)]
    pub sequence_averaging: bool,
    /// Report even when predictions are missing.
    #[arg(long)]
    pub allow_missing: bool,
    /// markdown, csv, or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    /// Save the report as JSON for `report --merge`.
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    /// Save the adapter's predictions as JSONL.
    #[arg(long)]
    pub save_predictions: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub llm_client: LlmArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ServeArgs {
    /// Open a session on this dataset at startup.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Adapter for the startup session: gold, first_row, or an HTTP URL.
    #[arg(long, default_value = "gold")]
    pub adapter: String,
    /// word or sentence.
    #[arg(long, default_value = "word")]
    pub level: String,
    /// Let the startup session accept questions that do not flip the model.
    #[arg(long)]
    pub allow_unflipped: bool,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Persist session logs here and resume any found at startup.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// Report JSON files written by `evaluate --out-report`.
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    /// One table with a column per model.
    #[arg(long)]
    pub merge: bool,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        tabrobust::Execution::Sequential
    } else {
        tabrobust::Execution::Parallel
    };
    let res = match &cli.command {
        Command::Perturb(a) => commands::perturb(a, exec),
        Command::Generate(a) => commands::generate(a, exec),
        Command::Evaluate(a) => commands::evaluate(a, exec),
        Command::Serve(a) => commands::serve(a),
        Command::Report(a) => commands::report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
