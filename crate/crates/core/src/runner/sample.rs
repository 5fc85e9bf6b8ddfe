use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use chrono::NaiveDate;
use serde::Serialize;

use super::RunError;
use crate::corpus::{
    clean_with_report, ingest_feed, label_records, stratified_sample, ClaimRecord, CleanReport, Rejection,
    SamplingPlan, Shortfall, UnmappedReport, VerdictMap,
};
use crate::fetch::{extract_main_text, FetchLimits, Fetcher};

/// Record index with its extracted text and truncation flag, or a reason.
type FetchOutcome = (usize, Result<(String, bool), String>);

#[derive(Debug, Clone, Default, Serialize)]
pub struct ArticleReport {
    pub fetched: usize,
    pub truncated: usize,
    /// (record id, reason) for every record left without an article.
    pub failed: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub ingested: usize,
    pub rejected: Vec<(usize, String)>,
    pub clean: CleanReport,
    pub unmapped: UnmappedReport,
    pub labeled: usize,
    pub sampled: usize,
    pub shortfalls: Vec<Shortfall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub articles: Option<ArticleReport>,
}

/// Feed to labeled, cleaned, stratified sample.
pub fn prepare_sample(
    feed: &Path,
    map: &VerdictMap,
    plan: &SamplingPlan,
    today: NaiveDate,
) -> Result<(Vec<ClaimRecord>, SampleReport), RunError> {
    let ingest = ingest_feed(feed)?;
    let ingested = ingest.records.len() + ingest.rejected.len();
    let (cleaned, clean) = clean_with_report(ingest.records, today);
    let (labeled, unmapped) = label_records(cleaned, map);
    let outcome = stratified_sample(&labeled, plan);
    let report = SampleReport {
        ingested,
        rejected: ingest.rejected.into_iter().map(|Rejection { position, reason }| (position, reason)).collect(),
        clean,
        unmapped,
        labeled: labeled.len(),
        sampled: outcome.records.len(),
        shortfalls: outcome.shortfalls,
        articles: None,
    };
    Ok((outcome.records, report))
}

/// Fetches and extracts every record's fact-check article in parallel.
/// Records that already carry an article are left alone.
pub fn fetch_articles(
    records: &mut [ClaimRecord],
    fetcher: &dyn Fetcher,
    limits: &FetchLimits,
    workers: usize,
) -> ArticleReport {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<FetchOutcome>> = Mutex::new(Vec::new());
    let todo: Vec<(usize, String)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.article().is_none())
        .map(|(i, r)| (i, r.fact_check_url.clone()))
        .collect();
    thread::scope(|s| {
        for _ in 0..workers.clamp(1, todo.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((idx, url)) = todo.get(i) else { break };
                let outcome = fetcher
                    .fetch(url, limits)
                    .map_err(|e| e.to_string())
                    .and_then(|doc| extract_main_text(&doc, limits).map_err(|e| e.to_string()))
                    .map(|x| (x.text, x.truncated));
                results.lock().expect("results poisoned").push((*idx, outcome));
            });
        }
    });
    let mut results = results.into_inner().expect("results poisoned");
    results.sort_by_key(|(i, _)| *i);
    let mut report = ArticleReport::default();
    for (i, outcome) in results {
        match outcome {
            Ok((text, truncated)) => {
                report.fetched += 1;
                report.truncated += usize::from(truncated);
                records[i].article_text = Some(text);
            }
            Err(reason) => report.failed.push((records[i].id.clone(), reason)),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fetch::{Document, FetchError};
    use crate::testkit::MapFetcher;
    use crate::corpus::{record, VerdictLabel};

    #[test]
    fn articles_attached_and_failures_listed() {
        let mut data = vec![
            record("a", "x", "2020-01-01", Some(VerdictLabel::True)),
            record("b", "y", "2020-01-01", Some(VerdictLabel::False)),
        ];
        data[1].fact_check_url = "https://broken.example/".into();
        for r in &mut data {
            r.article_text = None;
        }
        let url = data[0].fact_check_url.clone();
        let fetcher = MapFetcher::new()
            .page(&url, Ok(Document::html(&url, "<p>The article body says this claim is accurate.</p>")))
            .page("https://broken.example/", Err(FetchError::Timeout));
        let report = fetch_articles(&mut data, &fetcher, &FetchLimits::default(), 2);
        assert_eq!(report.fetched, 1);
        assert_eq!(report.failed, vec![("b".to_string(), "timed out".to_string())]);
        assert!(data[0].article().unwrap().contains("accurate"));
        assert!(data[1].article().is_none());
    }
}
