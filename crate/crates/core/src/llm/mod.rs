//! Text-generation endpoints behind a retrying, rate-limited gateway.

mod gateway;
mod http;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use gateway::{Gateway, GatewayError, RetryPolicy, Summarizer};
pub use http::{connect, BackendKind, HfTextGeneration, OpenAiChat};

pub const ENV_ENDPOINT: &str = "FACTCHECK_ENDPOINT";
pub const ENV_MODEL: &str = "FACTCHECK_MODEL";
pub const ENV_API_KEY: &str = "FACTCHECK_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub model_id: String,
    pub endpoint: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            max_new_tokens: 256,
            model_id: String::new(),
            endpoint: String::new(),
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidParams(format!(
                "temperature {} outside 0..=2",
                self.temperature
            )));
        }
        if self.max_new_tokens == 0 {
            return Err(GatewayError::InvalidParams("max_new_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationResult {
    pub text: String,
    pub latency: Duration,
    pub attempt_count: u32,
    /// The endpoint stopped at the token limit.
    pub truncated: bool,
}

/// One successful endpoint reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited,
    #[error("request timed out")]
    Timeout,
    #[error("server error {0}")]
    Server(u16),
    #[error("client error {status}: {message}")]
    Client { status: u16, message: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("network failure: {0}")]
    Network(String),
}

impl CallError {
    /// Timeouts, 5xx, 429 and connection failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            CallError::RateLimited | CallError::Timeout | CallError::Server(_) | CallError::Network(_)
        )
    }
}

/// A single-prompt text completion service.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str, params: &GenerationParams) -> Result<Completion, CallError>;
}
