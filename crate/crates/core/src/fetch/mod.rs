//! Web page retrieval and readable-text extraction.

mod extract;

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use url::Url;

use crate::limit::Semaphore;

pub use extract::{extract_main_text, truncate_at_whitespace, ExtractError, Extraction};

pub const DEFAULT_USER_AGENT: &str = concat!("factcheck-harness/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchLimits {
    pub max_chars: usize,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    pub max_redirects: usize,
}

impl Default for FetchLimits {
    fn default() -> Self {
        Self {
            max_chars: 20_000,
            timeout: Duration::from_secs(20),
            max_redirects: 5,
        }
    }
}

impl FetchLimits {
    pub fn validate(&self) -> Result<(), FetchError> {
        if self.max_chars == 0 {
            return Err(FetchError::InvalidLimits("max_chars must be positive"));
        }
        if self.timeout.is_zero() {
            return Err(FetchError::InvalidLimits("timeout must be positive"));
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// A fetched response body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub url: String,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Document {
    pub fn html(url: &str, body: &str) -> Self {
        Self {
            url: url.to_string(),
            content_type: Some("text/html; charset=utf-8".to_string()),
            body: body.as_bytes().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("invalid url {0:?}")]
    InvalidUrl(String),
    #[error("scheme {0:?} is not allowed")]
    DisallowedScheme(String),
    #[error("network failure: {0}")]
    Network(String),
    #[error("timed out")]
    Timeout,
    #[error("http status {0}")]
    Status(u16),
    #[error("invalid limits: {0}")]
    InvalidLimits(&'static str),
}

/// Anything that can turn a URL into a document.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, limits: &FetchLimits) -> Result<Document, FetchError>;
}

/// Checks syntax and restricts to http(s).
pub fn validate_url(url: &str) -> Result<Url, FetchError> {
    let parsed = Url::parse(url.trim()).map_err(|_| FetchError::InvalidUrl(url.to_string()))?;
    match parsed.scheme() {
        "http" | "https" => Ok(parsed),
        other => Err(FetchError::DisallowedScheme(other.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct HttpFetcherConfig {
    pub user_agent: String,
    pub max_in_flight: usize,
    pub per_host_delay: Duration,
    pub max_redirects: usize,
}

impl Default for HttpFetcherConfig {
    fn default() -> Self {
        Self {
            user_agent: DEFAULT_USER_AGENT.to_string(),
            max_in_flight: 4,
            per_host_delay: Duration::from_millis(500),
            max_redirects: FetchLimits::default().max_redirects,
        }
    }
}

/// Blocking HTTP fetcher with an in-flight cap and per-host spacing.
/// Proxies are taken from the usual `HTTP_PROXY`/`HTTPS_PROXY` variables.
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
    in_flight: Semaphore,
    per_host_delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HttpFetcher {
    pub fn new(config: HttpFetcherConfig) -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(config.user_agent)
            .redirect(reqwest::redirect::Policy::limited(config.max_redirects))
            .build()
            .map_err(|e| FetchError::Network(e.to_string()))?;
        Ok(Self {
            client,
            in_flight: Semaphore::new(config.max_in_flight),
            per_host_delay: config.per_host_delay,
            next_slot: Mutex::new(HashMap::new()),
        })
    }

    fn wait_for_host(&self, host: &str) {
        if self.per_host_delay.is_zero() {
            return;
        }
        let now = Instant::now();
        let wait = {
            let mut slots = self.next_slot.lock().expect("host table poisoned");
            let slot = slots.entry(host.to_string()).or_insert(now);
            let start = (*slot).max(now);
            *slot = start + self.per_host_delay;
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str, limits: &FetchLimits) -> Result<Document, FetchError> {
        limits.validate()?;
        let parsed = validate_url(url)?;
        self.wait_for_host(parsed.host_str().unwrap_or_default());
        let _permit = self.in_flight.acquire();
        let response = self
            .client
            .get(parsed.as_str())
            .timeout(limits.timeout)
            .send()
            .map_err(classify)?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status(status.as_u16()));
        }
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let final_url = response.url().to_string();
        let body = response.bytes().map_err(classify)?.to_vec();
        Ok(Document {
            url: final_url,
            content_type,
            body,
        })
    }
}

fn classify(err: reqwest::Error) -> FetchError {
    if err.is_timeout() {
        FetchError::Timeout
    } else if let Some(status) = err.status() {
        FetchError::Status(status.as_u16())
    } else {
        FetchError::Network(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::FixtureServer;

    fn fetcher() -> HttpFetcher {
        HttpFetcher::new(HttpFetcherConfig {
            per_host_delay: Duration::ZERO,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn fetches_fixture_page() {
        let server = FixtureServer::start(vec![("/page", 200, "text/html", "<p>hello</p>".to_string())]);
        let doc = fetcher().fetch(&server.url("/page"), &FetchLimits::default()).unwrap();
        assert_eq!(doc.body, b"<p>hello</p>");
        assert_eq!(doc.content_type.as_deref(), Some("text/html"));
    }

    #[test]
    fn status_and_scheme_errors() {
        let server = FixtureServer::start(vec![]);
        let err = fetcher().fetch(&server.url("/missing"), &FetchLimits::default()).unwrap_err();
        assert_eq!(err, FetchError::Status(404));
        let err = fetcher().fetch("ftp://example.com/x", &FetchLimits::default()).unwrap_err();
        assert_eq!(err, FetchError::DisallowedScheme("ftp".into()));
        assert!(matches!(fetcher().fetch("::nope", &FetchLimits::default()), Err(FetchError::InvalidUrl(_))));
    }

    #[test]
    fn unreachable_host_fails_within_timeout() {
        let limits = FetchLimits {
            timeout: Duration::from_millis(500),
            ..Default::default()
        };
        let started = Instant::now();
        let err = fetcher().fetch("http://127.0.0.1:1/", &limits).unwrap_err();
        assert!(matches!(err, FetchError::Network(_) | FetchError::Timeout), "{err:?}");
        assert!(started.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn silent_server_times_out() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let limits = FetchLimits {
            timeout: Duration::from_millis(300),
            ..Default::default()
        };
        let started = Instant::now();
        let err = fetcher().fetch(&format!("http://{addr}/"), &limits).unwrap_err();
        assert_eq!(err, FetchError::Timeout);
        assert!(started.elapsed() < Duration::from_secs(3));
        drop(listener);
    }

    #[test]
    fn limits_validation() {
        assert!(FetchLimits { max_chars: 0, ..Default::default() }.validate().is_err());
        assert!(FetchLimits { timeout: Duration::ZERO, ..Default::default() }.validate().is_err());
    }
}
