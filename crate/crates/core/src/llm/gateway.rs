use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{Backend, CallError, GenerationParams, GenerationResult};
use crate::limit::Semaphore;
use crate::prompt::{render_summary_request, TemplateSet};
use crate::retrieval::Summarize;
use crate::seed::digest_hex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_secs(1),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            initial_backoff: Duration::ZERO,
            multiplier: 1.0,
        }
    }

    fn backoff(&self, failed_attempts: u32) -> Duration {
        let factor = self.multiplier.powi(failed_attempts.saturating_sub(1) as i32);
        self.initial_backoff.mul_f64(factor.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("generation failed after {attempts} attempt(s): {last}")]
    Call { attempts: u32, last: CallError },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("empty prompt")]
    EmptyPrompt,
}

impl GatewayError {
    /// Errors that will recur for every request, so a run should stop.
    pub fn is_fatal(&self) -> bool {
        match self {
            GatewayError::InvalidParams(_) => true,
            GatewayError::Call { last, .. } => matches!(last, CallError::Auth(_)),
            GatewayError::EmptyPrompt => false,
        }
    }
}

#[derive(Serialize)]
struct LogEntry<'a> {
    prompt_digest: String,
    model: &'a str,
    attempts: u32,
    ok: bool,
    truncated: bool,
    error: Option<String>,
}

/// Sends prompts to a [`Backend`] with retries, a concurrency cap and an
/// optional JSON-lines request log. Prompts are sent verbatim.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
    in_flight: Semaphore,
    calls: AtomicUsize,
    log: Option<Mutex<BufWriter<File>>>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, retry: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            backend,
            retry,
            in_flight: Semaphore::new(max_in_flight),
            calls: AtomicUsize::new(0),
            log: None,
        }
    }

    /// Appends one line per request to `path`.
    pub fn with_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    /// Number of `generate` calls made so far (not counting retries).
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.in_flight.peak()
    }

    pub fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<GenerationResult, GatewayError> {
        params.validate()?;
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let attempts_allowed = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        let outcome = loop {
            attempt += 1;
            let result = {
                let _permit = self.in_flight.acquire();
                self.backend.complete(prompt, params)
            };
            match result {
                Ok(completion) => break Ok(completion),
                Err(err) if err.is_retryable() && attempt < attempts_allowed => {
                    log::debug!("attempt {attempt} failed ({err}), retrying");
                    thread::sleep(self.retry.backoff(attempt));
                }
                Err(err) => break Err(err),
            }
        };
        self.write_log(prompt, params, attempt, &outcome);
        match outcome {
            Ok(c) => Ok(GenerationResult {
                text: c.text,
                latency: started.elapsed(),
                attempt_count: attempt,
                truncated: c.truncated,
            }),
            Err(last) => Err(GatewayError::Call { attempts: attempt, last }),
        }
    }

    fn write_log(
        &self,
        prompt: &str,
        params: &GenerationParams,
        attempts: u32,
        outcome: &Result<super::Completion, CallError>,
    ) {
        let Some(log) = &self.log else { return };
        let entry = LogEntry {
            prompt_digest: digest_hex(&[prompt]),
            model: &params.model_id,
            attempts,
            ok: outcome.is_ok(),
            truncated: outcome.as_ref().is_ok_and(|c| c.truncated),
            error: outcome.as_ref().err().map(ToString::to_string),
        };
        let mut w = log.lock().expect("request log poisoned");
        if let Ok(line) = serde_json::to_string(&entry) {
            let _ = writeln!(w, "{line}");
            let _ = w.flush();
        }
    }
}

/// Summarizes pages with the same gateway used for verdicts.
pub struct Summarizer<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a TemplateSet,
    pub params: &'a GenerationParams,
}

impl Summarize for Summarizer<'_> {
    fn summarize(&self, article: &str, focus: Option<&str>) -> Result<String, String> {
        let prompt = render_summary_request(self.templates, article, focus).map_err(|e| e.to_string())?;
        let out = self.gateway.generate(&prompt.text, self.params).map_err(|e| e.to_string())?;
        let text = out.text.trim();
        if text.is_empty() {
            return Err("empty summary".into());
        }
        Ok(text.to_string())
    }
}
