use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, CallError, Completion, GenerationParams};

/// Wire protocol of a generation endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// OpenAI-compatible `/chat/completions` (vLLM, llama.cpp, hosted APIs).
    #[default]
    OpenAi,
    /// Text Generation Inference `/generate`.
    Tgi,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "openai" | "chat" => Ok(BackendKind::OpenAi),
            "tgi" | "hf" => Ok(BackendKind::Tgi),
            other => Err(format!("unknown backend {other:?} (expected openai or tgi)")),
        }
    }
}

fn client(timeout: Duration) -> Result<Client, CallError> {
    Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| CallError::Network(e.to_string()))
}

fn send(request: reqwest::blocking::RequestBuilder) -> Result<Value, CallError> {
    let response = request.send().map_err(|e| {
        if e.is_timeout() {
            CallError::Timeout
        } else {
            CallError::Network(e.to_string())
        }
    })?;
    let status = response.status();
    let body = response.text().map_err(|e| CallError::Network(e.to_string()))?;
    match status {
        s if s.is_success() => {
            serde_json::from_str(&body).map_err(|e| CallError::Malformed(e.to_string()))
        }
        StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Err(CallError::Auth(body)),
        StatusCode::TOO_MANY_REQUESTS => Err(CallError::RateLimited),
        StatusCode::REQUEST_TIMEOUT | StatusCode::GATEWAY_TIMEOUT => Err(CallError::Timeout),
        s if s.is_server_error() => Err(CallError::Server(s.as_u16())),
        s => Err(CallError::Client {
            status: s.as_u16(),
            message: body.chars().take(500).collect(),
        }),
    }
}

/// OpenAI-compatible chat endpoint. `endpoint` is the API base, for example
/// `http://localhost:8000/v1`.
pub struct OpenAiChat {
    client: Client,
    base: String,
    api_key: Option<String>,
}

impl OpenAiChat {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, CallError> {
        Ok(Self {
            client: client(timeout)?,
            base: endpoint.trim_end_matches('/').to_string(),
            api_key,
        })
    }
}

impl Backend for OpenAiChat {
    fn complete(&self, prompt: &str, params: &GenerationParams) -> Result<Completion, CallError> {
        let url = if self.base.ends_with("/chat/completions") {
            self.base.clone()
        } else {
            format!("{}/chat/completions", self.base)
        };
        let body = json!({
            "model": params.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_new_tokens,
        });
        let mut request = self.client.post(url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let value = send(request)?;
        let choice = value
            .pointer("/choices/0")
            .ok_or_else(|| CallError::Malformed("no choices".into()))?;
        let text = choice
            .pointer("/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| CallError::Malformed("no message content".into()))?;
        Ok(Completion {
            text: text.to_string(),
            truncated: choice.get("finish_reason").and_then(Value::as_str) == Some("length"),
        })
    }
}

/// Hugging Face Text Generation Inference endpoint.
pub struct HfTextGeneration {
    client: Client,
    base: String,
    api_key: Option<String>,
}

impl HfTextGeneration {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, CallError> {
        Ok(Self {
            client: client(timeout)?,
            base: endpoint.trim_end_matches('/').to_string(),
            api_key,
        })
    }
}

impl Backend for HfTextGeneration {
    fn complete(&self, prompt: &str, params: &GenerationParams) -> Result<Completion, CallError> {
        let url = if self.base.ends_with("/generate") {
            self.base.clone()
        } else {
            format!("{}/generate", self.base)
        };
        let body = json!({
            "inputs": prompt,
            "parameters": {
                "temperature": params.temperature,
                "max_new_tokens": params.max_new_tokens,
                "do_sample": params.temperature > 0.0,
                "return_full_text": false,
                "details": true,
            },
        });
        let mut request = self.client.post(url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let value = send(request)?;
        let value = value.get(0).unwrap_or(&value);
        let text = value
            .get("generated_text")
            .and_then(Value::as_str)
            .ok_or_else(|| CallError::Malformed("no generated_text".into()))?;
        Ok(Completion {
            text: text.to_string(),
            truncated: value.pointer("/details/finish_reason").and_then(Value::as_str) == Some("length"),
        })
    }
}

pub fn connect(
    kind: BackendKind,
    endpoint: &str,
    api_key: Option<String>,
    timeout: Duration,
) -> Result<Arc<dyn Backend>, CallError> {
    if endpoint.trim().is_empty() {
        return Err(CallError::Client { status: 0, message: "no endpoint configured".into() });
    }
    Ok(match kind {
        BackendKind::OpenAi => Arc::new(OpenAiChat::new(endpoint, api_key, timeout)?),
        BackendKind::Tgi => Arc::new(HfTextGeneration::new(endpoint, api_key, timeout)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::FixtureServer;

    fn params() -> GenerationParams {
        GenerationParams { model_id: "m".into(), ..Default::default() }
    }

    #[test]
    fn openai_response_parsed() {
        let body = r#"{"choices":[{"message":{"content":"{\"score\": 12}"},"finish_reason":"length"}]}"#;
        let server = FixtureServer::start(vec![("/v1/chat/completions", 200, "application/json", body.into())]);
        let backend = OpenAiChat::new(&server.url("/v1"), None, Duration::from_secs(5)).unwrap();
        let out = backend.complete("prompt", &params()).unwrap();
        assert_eq!(out.text, "{\"score\": 12}");
        assert!(out.truncated);
        let req = server.requests().pop().unwrap();
        let sent: Value = serde_json::from_str(&req.body).unwrap();
        assert_eq!(sent["temperature"], 0.1);
        assert_eq!(sent["max_tokens"], 256);
        assert_eq!(sent["messages"][0]["content"], "prompt");
    }

    #[test]
    fn tgi_response_parsed() {
        let body = r#"[{"generated_text":"ok","details":{"finish_reason":"eos_token"}}]"#;
        let server = FixtureServer::start(vec![("/generate", 200, "application/json", body.into())]);
        let backend = HfTextGeneration::new(&server.url(""), None, Duration::from_secs(5)).unwrap();
        let out = backend.complete("p", &params()).unwrap();
        assert_eq!(out, Completion { text: "ok".into(), truncated: false });
    }

    #[test]
    fn status_classification() {
        let server = FixtureServer::start(vec![
            ("/auth/chat/completions", 401, "text/plain", "no".into()),
            ("/busy/chat/completions", 429, "text/plain", "slow down".into()),
            ("/down/chat/completions", 503, "text/plain", "".into()),
            ("/bad/chat/completions", 200, "application/json", "not json".into()),
        ]);
        let call = |base: &str| {
            OpenAiChat::new(&server.url(base), None, Duration::from_secs(5))
                .unwrap()
                .complete("p", &params())
                .unwrap_err()
        };
        assert!(matches!(call("/auth"), CallError::Auth(_)));
        assert_eq!(call("/busy"), CallError::RateLimited);
        assert_eq!(call("/down"), CallError::Server(503));
        assert!(matches!(call("/bad"), CallError::Malformed(_)));
    }
}
