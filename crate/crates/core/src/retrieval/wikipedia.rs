use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde_json::Value;
use url::Url;

use super::{DateWindow, RetrievalError, SearchProvider, SearchResult, SourceKind, EVIDENCE_ITEMS};

pub const WIKIPEDIA_API: &str = "https://en.wikipedia.org/w/api.php";

static TAGS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").expect("valid regex"));

/// Removes HTML tags and decodes the handful of entities search APIs emit.
pub fn strip_markup(s: &str) -> String {
    let text = TAGS.replace_all(s, "");
    let decoded = text
        .replace("&quot;", "\"")
        .replace("&#039;", "'")
        .replace("&#39;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&");
    decoded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// English Wikipedia full-text search.
pub struct WikipediaSearch {
    client: reqwest::blocking::Client,
    api: String,
}

impl WikipediaSearch {
    pub fn new(api: Option<&str>, timeout: Duration) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(crate::fetch::DEFAULT_USER_AGENT)
            .build()
            .map_err(|e| RetrievalError::Provider(e.to_string()))?;
        Ok(Self {
            client,
            api: api.unwrap_or(WIKIPEDIA_API).to_string(),
        })
    }

    fn page_url(&self, title: &str) -> String {
        let host = Url::parse(&self.api)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_else(|| "en.wikipedia.org".into());
        let mut url = Url::parse(&format!("https://{host}/wiki/")).expect("valid base");
        url.path_segments_mut()
            .expect("base has path")
            .pop_if_empty()
            .push(&title.replace(' ', "_"));
        url.to_string()
    }
}

impl SearchProvider for WikipediaSearch {
    fn kind(&self) -> SourceKind {
        SourceKind::Encyclopedia
    }

    fn search(
        &self,
        query: &str,
        max_results: usize,
        _window: Option<&DateWindow>,
    ) -> Result<Vec<SearchResult>, RetrievalError> {
        let limit = max_results.to_string();
        let url = Url::parse_with_params(
            &self.api,
            &[
                ("action", "query"),
                ("list", "search"),
                ("format", "json"),
                ("srsearch", query),
                ("srlimit", limit.as_str()),
            ],
        )
        .map_err(|e| RetrievalError::Config(format!("bad api url: {e}")))?;
        let response = self
            .client
            .get(url)
            .send()
            .map_err(|e| RetrievalError::Provider(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RetrievalError::Provider(format!("status {}", response.status())));
        }
        let body: Value = response.json().map_err(|e| RetrievalError::Provider(e.to_string()))?;
        let hits = body
            .pointer("/query/search")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::Provider("unexpected response shape".into()))?;
        Ok(hits
            .iter()
            .filter_map(|hit| {
                let title = hit.get("title")?.as_str()?;
                Some(SearchResult {
                    title: title.to_string(),
                    url: self.page_url(title),
                    snippet: strip_markup(hit.get("snippet").and_then(Value::as_str).unwrap_or("")),
                    date: None,
                })
            })
            .take(max_results)
            .collect())
    }
}

/// Top [`EVIDENCE_ITEMS`] encyclopedia hits for `query`.
pub fn encyclopedia_search(
    provider: &dyn SearchProvider,
    query: &str,
) -> Result<Vec<SearchResult>, RetrievalError> {
    let query = query.trim();
    if query.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let mut results = provider.search(query, EVIDENCE_ITEMS, None)?;
    results.truncate(EVIDENCE_ITEMS);
    Ok(results)
}
