use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{DateWindow, RetrievalError, SearchProvider, SearchResult, SourceKind, EVIDENCE_ITEMS, WEB_SCAN_DEPTH};
use crate::fetch::validate_url;

pub const SERPER_ENDPOINT: &str = "https://google.serper.dev/search";

/// Web search over a serper-compatible JSON API. Requests carry a custom
/// date range ending at the cutoff.
pub struct SerperSearch {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
}

impl SerperSearch {
    pub fn new(endpoint: Option<&str>, api_key: String, timeout: Duration) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RetrievalError::Provider(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.unwrap_or(SERPER_ENDPOINT).to_string(),
            api_key,
        })
    }
}

/// Absolute dates as search APIs print them; relative ones ("3 days ago")
/// yield `None`.
pub fn parse_result_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    ["%b %d, %Y", "%B %d, %Y", "%d %b %Y", "%d %B %Y", "%Y-%m-%d", "%m/%d/%Y"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
        .or_else(|| s.get(..10).and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()))
}

impl SearchProvider for SerperSearch {
    fn kind(&self) -> SourceKind {
        SourceKind::WebSearch
    }

    fn supports_date_filter(&self) -> bool {
        true
    }

    fn search(
        &self,
        query: &str,
        max_results: usize,
        window: Option<&DateWindow>,
    ) -> Result<Vec<SearchResult>, RetrievalError> {
        let mut body = json!({ "q": query, "num": max_results });
        if let Some(w) = window {
            body["tbs"] = json!(format!("cdr:1,cd_max:{}", w.cutoff().format("%m/%d/%Y")));
        }
        let response = self
            .client
            .post(&self.endpoint)
            .header("X-API-KEY", &self.api_key)
            .json(&body)
            .send()
            .map_err(|e| RetrievalError::Provider(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RetrievalError::Provider(format!("status {}", response.status())));
        }
        let value: Value = response.json().map_err(|e| RetrievalError::Provider(e.to_string()))?;
        let organic = value
            .get("organic")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::Provider("response has no organic results".into()))?;
        Ok(organic
            .iter()
            .filter_map(|hit| {
                Some(SearchResult {
                    title: hit.get("title")?.as_str()?.to_string(),
                    url: hit.get("link")?.as_str()?.to_string(),
                    snippet: hit.get("snippet").and_then(Value::as_str).unwrap_or("").to_string(),
                    date: hit.get("date").and_then(Value::as_str).and_then(parse_result_date),
                })
            })
            .take(max_results)
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebSearchOutcome {
    pub results: Vec<SearchResult>,
    pub scanned: usize,
    pub after_cutoff: usize,
    pub undated_dropped: usize,
    pub unusable_links: usize,
}

/// Scans the first [`WEB_SCAN_DEPTH`] results, drops those dated after the
/// window cutoff (and undated ones when `drop_undated`), drops results
/// without a usable http(s) link, and keeps the first [`EVIDENCE_ITEMS`].
pub fn web_search(
    provider: &dyn SearchProvider,
    query: &str,
    window: &DateWindow,
    drop_undated: bool,
) -> Result<WebSearchOutcome, RetrievalError> {
    let query = query.trim();
    if query.is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let raw = provider.search(query, WEB_SCAN_DEPTH, Some(window))?;
    let mut out = WebSearchOutcome::default();
    for result in raw.into_iter().take(WEB_SCAN_DEPTH) {
        out.scanned += 1;
        match result.date {
            Some(d) if !window.admits(d) => {
                out.after_cutoff += 1;
                continue;
            }
            None if drop_undated => {
                out.undated_dropped += 1;
                continue;
            }
            _ => {}
        }
        if validate_url(&result.url).is_err() {
            out.unusable_links += 1;
            continue;
        }
        if out.results.len() < EVIDENCE_ITEMS {
            out.results.push(result);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::FixtureServer;

    #[test]
    fn result_dates() {
        let d = |s: &str| parse_result_date(s);
        assert_eq!(d("Mar 5, 2021"), "2021-03-05".parse().ok());
        assert_eq!(d("2021-03-05T10:00:00Z"), "2021-03-05".parse().ok());
        assert_eq!(d("3 days ago"), None);
    }

    #[test]
    fn serper_request_carries_cutoff() {
        let body = r#"{"organic":[
            {"title":"A","link":"https://a.example/1","snippet":"sa","date":"Jan 2, 2020"},
            {"title":"B","link":"https://b.example/2","snippet":"sb"}]}"#;
        let server = FixtureServer::start(vec![("/search", 200, "application/json", body.into())]);
        let provider = SerperSearch::new(Some(&server.url("/search")), "k".into(), Duration::from_secs(5)).unwrap();
        assert!(provider.supports_date_filter());
        let window = DateWindow::before_review("2020-03-10".parse().unwrap());
        let out = web_search(&provider, "q", &window, false).unwrap();
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].date, "2020-01-02".parse().ok());
        let req = server.requests().pop().unwrap();
        let sent: Value = serde_json::from_str(&req.body).unwrap();
        assert_eq!(sent["num"], 20);
        assert_eq!(sent["tbs"], "cdr:1,cd_max:03/03/2020");
    }
}
