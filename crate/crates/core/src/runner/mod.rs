//! Resumable, parallel task runs with a JSON-lines result log.
//!
//! A run is a set of work units, one per (claim, configuration). Each unit is
//! evaluated independently with seeds derived from the claim id, so results
//! do not depend on scheduling. Completed units are appended to
//! `records.jsonl` as they finish; a rerun skips units already logged with
//! a matching configuration digest. When every unit is done the log is
//! rewritten in canonical order and reports are written next to it.

mod config;
mod exec;
mod record;
mod report;
mod sample;

use std::path::Path;

pub use config::{task3_configs, FetchConfig, GenerationConfig, RetrievalConfig, RunConfig, Task3Config, UnitConfig};
pub use exec::{load_settings, RunSettings, RunSummary, Runner, Services};
pub use record::{read_log, LogScan, RunRecord, Quarantined};
pub use report::{baseline_report, read_baseline, read_records, task_report, write_reports, BaselineRow, BaselineScan};
pub use sample::{fetch_articles, prepare_sample, ArticleReport, SampleReport};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SETTINGS_FILE: &str = "run.toml";
pub const QUARANTINE_FILE: &str = "quarantine.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const PER_CONFIG_CSV: &str = "per_config.csv";

/// Source of record timestamps.
pub trait Clock: Send + Sync {
    fn now_rfc3339(&self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_rfc3339(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error("endpoint failure stopped the run: {0}")]
    Fatal(crate::llm::GatewayError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

impl RunError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }
}

impl From<crate::agent::AgentError> for RunError {
    fn from(e: crate::agent::AgentError) -> Self {
        match e {
            crate::agent::AgentError::Prompt(p) => RunError::Prompt(p),
            crate::agent::AgentError::Fatal(g) => RunError::Fatal(g),
        }
    }
}
