//! Evidence retrieval: encyclopedia and date-bounded web search, plus
//! turning search hits into snippets, full articles or summaries.

mod fixture;
mod materialize;
mod web;
mod wikipedia;

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::fetch::FetchError;

pub use fixture::FixtureSearch;
pub use materialize::{materialize, DroppedItem, MaterializeContext, Materialized, Summarize};
pub use web::{web_search, SerperSearch, WebSearchOutcome};
pub use wikipedia::{encyclopedia_search, strip_markup, WikipediaSearch};

/// Results kept as evidence per search.
pub const EVIDENCE_ITEMS: usize = 3;
/// Web results scanned before the date filter.
pub const WEB_SCAN_DEPTH: usize = 20;
/// Web results must predate the review date by at least this many days.
pub const DEFAULT_MARGIN_DAYS: i64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Encyclopedia,
    WebSearch,
    None,
}

impl SourceKind {
    pub fn code(self) -> &'static str {
        match self {
            SourceKind::Encyclopedia => "wiki",
            SourceKind::WebSearch => "web",
            SourceKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceFormat {
    Snippet,
    FullArticle,
    Summary,
}

impl EvidenceFormat {
    pub fn code(self) -> &'static str {
        match self {
            EvidenceFormat::Snippet => "snippet",
            EvidenceFormat::FullArticle => "full",
            EvidenceFormat::Summary => "summary",
        }
    }
}

impl FromStr for EvidenceFormat {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snippet" => Ok(EvidenceFormat::Snippet),
            "full" | "fullarticle" | "full_article" => Ok(EvidenceFormat::FullArticle),
            "summary" => Ok(EvidenceFormat::Summary),
            other => Err(RetrievalError::Config(format!("unknown evidence format {other:?}"))),
        }
    }
}

/// One hit from a search provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub title: String,
    pub url: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub title: String,
    pub url: String,
    pub text: String,
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

/// What the agent gets back from its single tool call. At most
/// [`EVIDENCE_ITEMS`] items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub source: SourceKind,
    pub format: EvidenceFormat,
    pub query: String,
    pub items: Vec<EvidenceItem>,
}

impl Evidence {
    pub fn empty(source: SourceKind, format: EvidenceFormat, query: &str) -> Self {
        Self {
            source,
            format,
            query: query.to_string(),
            items: Vec::new(),
        }
    }

    /// Numbered items, each a title line followed by its text.
    pub fn render(&self) -> String {
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| format!("[{}] {} ({})\n{}", i + 1, item.title, item.url, item.text))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Results must be dated no later than `upper_bound - margin_days`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub upper_bound: NaiveDate,
    pub margin_days: i64,
}

impl DateWindow {
    pub fn before_review(review_date: NaiveDate) -> Self {
        Self {
            upper_bound: review_date,
            margin_days: DEFAULT_MARGIN_DAYS,
        }
    }

    pub fn cutoff(&self) -> NaiveDate {
        self.upper_bound - Duration::days(self.margin_days)
    }

    pub fn admits(&self, date: NaiveDate) -> bool {
        date <= self.cutoff()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetrievalError {
    #[error("empty search query")]
    EmptyQuery,
    #[error("search provider failed: {0}")]
    Provider(String),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// A search backend.
pub trait SearchProvider: Send + Sync {
    fn kind(&self) -> SourceKind;

    /// Up to `max_results` hits in provider rank order. Providers that can
    /// restrict by date apply `window` server-side; callers still filter.
    fn search(
        &self,
        query: &str,
        max_results: usize,
        window: Option<&DateWindow>,
    ) -> Result<Vec<SearchResult>, RetrievalError>;

    fn supports_date_filter(&self) -> bool {
        false
    }
}

impl fmt::Debug for dyn SearchProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SearchProvider({:?})", self.kind())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_seven_days_before_review() {
        let w = DateWindow::before_review("2022-06-15".parse().unwrap());
        assert_eq!(w.cutoff(), "2022-06-08".parse::<NaiveDate>().unwrap());
        assert!(w.admits("2022-06-08".parse().unwrap()));
        assert!(!w.admits("2022-06-09".parse().unwrap()));
    }

    #[test]
    fn render_numbers_items() {
        let ev = Evidence {
            source: SourceKind::WebSearch,
            format: EvidenceFormat::Snippet,
            query: "q".into(),
            items: vec![
                EvidenceItem { title: "A".into(), url: "u1".into(), text: "t1".into(), date: None },
                EvidenceItem { title: "B".into(), url: "u2".into(), text: "t2".into(), date: None },
            ],
        };
        assert_eq!(ev.render(), "[1] A (u1)\nt1\n\n[2] B (u2)\nt2");
    }
}
