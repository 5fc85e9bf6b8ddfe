use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::fetch::FetchLimits;
use crate::llm::{BackendKind, GenerationParams, RetryPolicy};
use crate::prompt::{enumerate_specs, PromptSpec, Task};
use crate::retrieval::{EvidenceFormat, SourceKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub initial_backoff_secs: f64,
    /// Environment variable holding the API key, if any.
    pub api_key_env: String,
    /// Optional JSON-lines log of every endpoint request.
    pub request_log: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let params = GenerationParams::default();
        Self {
            backend: BackendKind::OpenAi,
            endpoint: String::new(),
            model: String::new(),
            temperature: params.temperature,
            max_new_tokens: params.max_new_tokens,
            timeout_secs: 120.0,
            max_in_flight: 4,
            max_attempts: 3,
            initial_backoff_secs: 1.0,
            api_key_env: crate::llm::ENV_API_KEY.to_string(),
            request_log: None,
        }
    }
}

impl GenerationConfig {
    pub fn params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            max_new_tokens: self.max_new_tokens,
            model_id: self.model.clone(),
            endpoint: self.endpoint.clone(),
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.max_attempts.max(1),
            initial_backoff: Duration::from_secs_f64(self.initial_backoff_secs.max(0.0)),
            multiplier: 2.0,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    /// `wikipedia`, `fixture:<path>` or `none`.
    pub encyclopedia: String,
    /// `serper`, `fixture:<path>` or `none`.
    pub web: String,
    pub web_endpoint: Option<String>,
    pub web_api_key_env: String,
    pub drop_undated: bool,
    pub timeout_secs: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            encyclopedia: "wikipedia".into(),
            web: "serper".into(),
            web_endpoint: None,
            web_api_key_env: "SERPER_API_KEY".into(),
            drop_undated: false,
            timeout_secs: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub limits: FetchLimits,
    pub per_host_delay_ms: u64,
    pub max_in_flight: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            limits: FetchLimits::default(),
            per_host_delay_ms: 500,
            max_in_flight: 4,
        }
    }
}

/// Everything that determines a run. Loaded from TOML; CLI flags override
/// individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    /// Prompt spec keys (`zs`, `cot+enrich`, ...) or task 3 configuration
    /// keys (`none`, `wiki+snippet`, ...). Empty means all.
    pub specs: Vec<String>,
    pub workers: usize,
    /// Stop after this many new evaluations (the run can be resumed).
    pub limit: Option<usize>,
    pub templates_dir: Option<PathBuf>,
    pub excerpt_chars: usize,
    pub generation: GenerationConfig,
    pub retrieval: RetrievalConfig,
    pub fetch: FetchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dataset: PathBuf::from("dataset.jsonl"),
            out_dir: PathBuf::from("runs"),
            specs: Vec::new(),
            workers: 4,
            limit: None,
            templates_dir: None,
            excerpt_chars: crate::prompt::DEFAULT_EXCERPT_CHARS,
            generation: GenerationConfig::default(),
            retrieval: RetrievalConfig::default(),
            fetch: FetchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let body = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        toml::from_str(&body).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    /// Configurations to evaluate for `task`, in canonical order.
    pub fn unit_configs(&self, task: Task) -> Result<Vec<UnitConfig>, RunError> {
        let all: Vec<UnitConfig> = match task {
            Task::FactCheckT3 => task3_configs().into_iter().map(UnitConfig::Agent).collect(),
            _ => enumerate_specs(task).into_iter().map(UnitConfig::Prompt).collect(),
        };
        if self.specs.is_empty() || self.specs.iter().any(|s| s == "all") {
            return Ok(all);
        }
        let mut chosen = Vec::new();
        for key in &self.specs {
            let key = key.trim();
            let found = all
                .iter()
                .find(|c| c.key() == key)
                .ok_or_else(|| RunError::Config(format!("unknown configuration {key:?} for {task}")))?;
            if !chosen.contains(found) {
                chosen.push(*found);
            }
        }
        // Canonical order regardless of how they were listed.
        chosen.sort_by_key(|c| all.iter().position(|a| a == c));
        Ok(chosen)
    }
}

/// A task 3 configuration: which tool the agent gets and in what form the
/// evidence is returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task3Config {
    pub source: SourceKind,
    pub format: EvidenceFormat,
}

impl Task3Config {
    pub fn key(&self) -> String {
        match self.source {
            SourceKind::None => "none".into(),
            s => format!("{}+{}", s.code(), self.format.code()),
        }
    }
}

/// The seven task 3 configurations: no tool, then encyclopedia and web
/// search each with snippet, full-article and summary evidence.
pub fn task3_configs() -> Vec<Task3Config> {
    let mut out = vec![Task3Config {
        source: SourceKind::None,
        format: EvidenceFormat::Snippet,
    }];
    for source in [SourceKind::Encyclopedia, SourceKind::WebSearch] {
        for format in [EvidenceFormat::Snippet, EvidenceFormat::FullArticle, EvidenceFormat::Summary] {
            out.push(Task3Config { source, format });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitConfig {
    Prompt(PromptSpec),
    Agent(Task3Config),
}

impl UnitConfig {
    pub fn key(&self) -> String {
        match self {
            UnitConfig::Prompt(s) => s.key(),
            UnitConfig::Agent(c) => c.key(),
        }
    }
}
