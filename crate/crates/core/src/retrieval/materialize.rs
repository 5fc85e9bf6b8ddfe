use serde::{Deserialize, Serialize};

use super::{Evidence, EvidenceFormat, EvidenceItem, RetrievalError, SearchResult, SourceKind, EVIDENCE_ITEMS};
use crate::fetch::{extract_main_text, FetchLimits, Fetcher};

/// Produces a short summary of a page, optionally focused on a statement.
pub trait Summarize {
    fn summarize(&self, article: &str, focus: Option<&str>) -> Result<String, String>;
}

/// A search hit that could not be turned into evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Materialized {
    pub evidence: Evidence,
    pub dropped: Vec<DroppedItem>,
    pub summarizer_calls: usize,
}

/// Everything `materialize` needs besides the hits themselves.
pub struct MaterializeContext<'a> {
    pub limits: &'a FetchLimits,
    pub fetcher: Option<&'a dyn Fetcher>,
    pub summarizer: Option<&'a dyn Summarize>,
    /// Statement the summaries should focus on.
    pub focus: Option<&'a str>,
}

/// Turns up to [`EVIDENCE_ITEMS`] hits into evidence in the requested
/// format. Snippets are used as-is; full articles are fetched and cut to
/// `limits.max_chars`; summaries cost exactly one summarizer call per page
/// whose text was extracted. Failing items are dropped and reported.
pub fn materialize(
    source: SourceKind,
    format: EvidenceFormat,
    query: &str,
    results: &[SearchResult],
    ctx: &MaterializeContext<'_>,
) -> Result<Materialized, RetrievalError> {
    if format != EvidenceFormat::Snippet && ctx.fetcher.is_none() {
        return Err(RetrievalError::Config("full-article evidence needs a fetcher".into()));
    }
    if format == EvidenceFormat::Summary && ctx.summarizer.is_none() {
        return Err(RetrievalError::Config("summary evidence needs a summarizer".into()));
    }
    let mut out = Materialized {
        evidence: Evidence::empty(source, format, query),
        dropped: Vec::new(),
        summarizer_calls: 0,
    };
    for hit in results.iter().take(EVIDENCE_ITEMS) {
        let text = match format {
            EvidenceFormat::Snippet => {
                let s = hit.snippet.trim();
                if s.is_empty() { Err("empty snippet".to_string()) } else { Ok(s.to_string()) }
            }
            EvidenceFormat::FullArticle => page_text(hit, ctx),
            EvidenceFormat::Summary => page_text(hit, ctx).and_then(|page| {
                out.summarizer_calls += 1;
                ctx.summarizer.expect("checked above").summarize(&page, ctx.focus)
            }),
        };
        match text {
            Ok(text) => out.evidence.items.push(EvidenceItem {
                title: hit.title.clone(),
                url: hit.url.clone(),
                text,
                date: hit.date,
            }),
            Err(reason) => {
                log::debug!("dropping evidence {}: {reason}", hit.url);
                out.dropped.push(DroppedItem { url: hit.url.clone(), reason });
            }
        }
    }
    Ok(out)
}

fn page_text(hit: &SearchResult, ctx: &MaterializeContext<'_>) -> Result<String, String> {
    let fetcher = ctx.fetcher.expect("checked above");
    let doc = fetcher.fetch(&hit.url, ctx.limits).map_err(|e| e.to_string())?;
    let extraction = extract_main_text(&doc, ctx.limits).map_err(|e| e.to_string())?;
    Ok(extraction.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fetch::{Document, FetchError};
    use crate::testkit::{CountingSummarizer, MapFetcher};

    fn hits() -> Vec<SearchResult> {
        (1..=4)
            .map(|i| SearchResult {
                title: format!("T{i}"),
                url: format!("https://site{i}.example/page"),
                snippet: format!("snippet {i}"),
                date: None,
            })
            .collect()
    }

    fn fetcher() -> MapFetcher {
        let long = format!("<p>{}</p>", "lorem ipsum ".repeat(5_000));
        MapFetcher::new()
            .page("https://site1.example/page", Ok(Document::html("https://site1.example/page", &long)))
            .page("https://site2.example/page", Err(FetchError::Status(500)))
            .page("https://site3.example/page", Ok(Document::html("https://site3.example/page", "<p>A short but real paragraph of page text here.</p>")))
    }

    #[test]
    fn snippets_need_no_fetching() {
        let limits = FetchLimits::default();
        let ctx = MaterializeContext { limits: &limits, fetcher: None, summarizer: None, focus: None };
        let m = materialize(SourceKind::WebSearch, EvidenceFormat::Snippet, "q", &hits(), &ctx).unwrap();
        assert_eq!(m.evidence.items.len(), 3);
        assert_eq!(m.evidence.items[2].text, "snippet 3");
    }

    #[test]
    fn full_articles_capped_and_failures_dropped() {
        let limits = FetchLimits::default();
        let f = fetcher();
        let ctx = MaterializeContext { limits: &limits, fetcher: Some(&f), summarizer: None, focus: None };
        let m = materialize(SourceKind::Encyclopedia, EvidenceFormat::FullArticle, "q", &hits(), &ctx).unwrap();
        assert_eq!(m.evidence.items.len(), 2);
        assert!(m.evidence.items.iter().all(|i| i.text.chars().count() <= 20_000));
        assert_eq!(m.dropped.len(), 1);
        assert_eq!(m.dropped[0].url, "https://site2.example/page");
        assert_eq!(f.fetch_count(), 3);
    }

    #[test]
    fn one_summary_call_per_extracted_page() {
        let limits = FetchLimits::default();
        let f = fetcher();
        let s = CountingSummarizer::default();
        let ctx = MaterializeContext { limits: &limits, fetcher: Some(&f), summarizer: Some(&s), focus: Some("claim") };
        let m = materialize(SourceKind::WebSearch, EvidenceFormat::Summary, "q", &hits(), &ctx).unwrap();
        assert_eq!(m.summarizer_calls, 2);
        assert_eq!(s.calls(), 2);
        assert_eq!(m.evidence.items.len(), 2);
        let no_sum = MaterializeContext { summarizer: None, ..ctx };
        assert!(materialize(SourceKind::WebSearch, EvidenceFormat::Summary, "q", &hits(), &no_sum).is_err());
    }
}
