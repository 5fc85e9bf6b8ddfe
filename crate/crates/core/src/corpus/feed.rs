use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde_json::{Map, Value};

use super::{io_error, ClaimRecord, CorpusError};
use crate::seed::digest_hex;

/// Feed columns, as (canonical dotted name, snake_case alias).
const CLAIM: (&str, &str) = ("claimReviewed", "claim_text");
const DATE: (&str, &str) = ("datePublished", "review_date");
const URL: (&str, &str) = ("url", "fact_check_url");
const VERDICT: (&str, &str) = ("reviewRating.alternateName", "raw_verdict");
const CHECKER: (&str, &str) = ("author.name", "fact_checker");
const LANGUAGE: (&str, &str) = ("language", "language");
const CLAIM_AUTHOR: (&str, &str) = ("reviewRating.author.name", "claim_author");

const FIELDS: [(&str, &str); 7] = [CLAIM, DATE, URL, VERDICT, CHECKER, LANGUAGE, CLAIM_AUTHOR];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedFormat {
    JsonLines,
    Csv,
}

impl FeedFormat {
    fn sniff(path: &Path, body: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => FeedFormat::Csv,
            Some("jsonl" | "ndjson" | "json") => FeedFormat::JsonLines,
            _ => {
                if body.trim_start().starts_with(['{', '[']) {
                    FeedFormat::JsonLines
                } else {
                    FeedFormat::Csv
                }
            }
        }
    }
}

/// An entry that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line (JSON-lines) or row (CSV, excluding header) number.
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct FeedIngest {
    pub records: Vec<ClaimRecord>,
    pub rejected: Vec<Rejection>,
}

/// Reads a fact-check feed in JSON-lines (one object per line, or a single
/// JSON array) or CSV form with the seven feed columns.
pub fn ingest_feed(path: &Path) -> Result<FeedIngest, CorpusError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    let body = String::from_utf8(bytes)
        .map_err(|e| CorpusError::Corrupt(format!("{} is not UTF-8: {e}", path.display())))?;
    match FeedFormat::sniff(path, &body) {
        FeedFormat::JsonLines => ingest_json(&body),
        FeedFormat::Csv => ingest_csv(&body),
    }
}

fn ingest_json(body: &str) -> Result<FeedIngest, CorpusError> {
    let mut out = FeedIngest::default();
    let trimmed = body.trim_start();
    if trimmed.starts_with('[') {
        let entries: Vec<Value> = serde_json::from_str(trimmed)
            .map_err(|e| CorpusError::Corrupt(format!("invalid JSON array: {e}")))?;
        for (idx, entry) in entries.iter().enumerate() {
            push_json_entry(&mut out, idx + 1, entry);
        }
        return Ok(out);
    }
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(line) {
            Ok(entry) => push_json_entry(&mut out, idx + 1, &entry),
            Err(e) => out.rejected.push(Rejection {
                position: idx + 1,
                reason: format!("unparseable JSON: {e}"),
            }),
        }
    }
    Ok(out)
}

fn push_json_entry(out: &mut FeedIngest, position: usize, entry: &Value) {
    let Some(obj) = entry.as_object() else {
        out.rejected.push(Rejection {
            position,
            reason: "entry is not a JSON object".to_string(),
        });
        return;
    };
    let get = |field: (&str, &str)| json_field(obj, field.0).or_else(|| json_field(obj, field.1));
    match build_record(get, json_field(obj, "id"), json_field(obj, "article_text")) {
        Some(record) => out.records.push(record),
        None => out.rejected.push(Rejection {
            position,
            reason: "entry carries none of the feed fields".to_string(),
        }),
    }
}

/// Looks up a flat (possibly dotted) key first, then walks nested objects.
fn json_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    if let Some(v) = obj.get(key) {
        return scalar(v);
    }
    let mut parts = key.split('.');
    let mut current = obj.get(parts.next()?)?;
    for part in parts {
        current = current.as_object()?.get(part)?;
    }
    scalar(current)
}

fn scalar(v: &Value) -> Option<String> {
    let s = match v {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => return None,
    };
    (!s.is_empty()).then_some(s)
}

fn ingest_csv(body: &str) -> Result<FeedIngest, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Corrupt(format!("unreadable CSV header: {e}")))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let index = |field: (&str, &str)| column(field.0).or_else(|| column(field.1));
    let known: Vec<Option<usize>> = FIELDS.iter().map(|f| index(*f)).collect();
    if known.iter().all(Option::is_none) {
        return Err(CorpusError::Corrupt(
            "CSV header names none of the feed fields".to_string(),
        ));
    }
    let id_col = column("id");
    let article_col = column("article_text");

    let mut out = FeedIngest::default();
    for (idx, row) in reader.records().enumerate() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                out.rejected.push(Rejection {
                    position: idx + 1,
                    reason: format!("malformed CSV row: {e}"),
                });
                continue;
            }
        };
        let cell = |col: Option<usize>| {
            col.and_then(|c| row.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
        };
        let get = |field: (&str, &str)| {
            let pos = FIELDS.iter().position(|f| *f == field).expect("known field");
            cell(known[pos])
        };
        match build_record(get, cell(id_col), cell(article_col)) {
            Some(record) => out.records.push(record),
            None => out.rejected.push(Rejection {
                position: idx + 1,
                reason: "row carries none of the feed fields".to_string(),
            }),
        }
    }
    Ok(out)
}

fn build_record(
    get: impl Fn((&str, &str)) -> Option<String>,
    id: Option<String>,
    article: Option<String>,
) -> Option<ClaimRecord> {
    let values: Vec<Option<String>> = FIELDS.iter().map(|f| get(*f)).collect();
    if values.iter().all(Option::is_none) {
        return None;
    }
    let [claim, date, url, verdict, checker, language, claim_author]: [Option<String>; 7] =
        values.try_into().expect("seven fields");
    let claim_text = claim.unwrap_or_default();
    let fact_check_url = url.unwrap_or_default();
    let raw_date = date.unwrap_or_default();
    let id = id.unwrap_or_else(|| digest_hex(&[&claim_text, &raw_date, &fact_check_url])[..16].to_string());
    Some(ClaimRecord {
        id,
        claim_text,
        review_date: parse_date(&raw_date),
        claim_author,
        fact_check_url,
        raw_verdict: verdict.unwrap_or_default(),
        label: None,
        language: language.unwrap_or_default().to_lowercase(),
        fact_checker: checker.unwrap_or_default(),
        article_text: article,
    })
}

/// Accepts plain dates, RFC 3339 timestamps and naive date-times.
pub(crate) fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.date_naive());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.date());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(name: &str, body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        (dir, path)
    }

    const ENTRY: &str = r#"{"claimReviewed":"The moon is made of cheese.","datePublished":"2020-03-01","url":"https://www.snopes.com/fact-check/moon/","reviewRating.alternateName":"False","author.name":"Snopes","language":"en","reviewRating.author.name":"Someone"}"#;

    #[test]
    fn empty_feed_is_empty() {
        let (_d, path) = write("feed.jsonl", "");
        let ingest = ingest_feed(&path).unwrap();
        assert!(ingest.records.is_empty() && ingest.rejected.is_empty());
    }

    #[test]
    fn three_entries_three_records() {
        let body = format!("{ENTRY}\n{ENTRY}\n{ENTRY}\n");
        let (_d, path) = write("feed.jsonl", &body);
        let ingest = ingest_feed(&path).unwrap();
        assert_eq!(ingest.records.len(), 3);
        let r = &ingest.records[0];
        assert_eq!(r.claim_text, "The moon is made of cheese.");
        assert_eq!(r.review_date, Some(NaiveDate::from_ymd_opt(2020, 3, 1).unwrap()));
        assert_eq!(r.raw_verdict, "False");
        assert_eq!(r.fact_checker, "Snopes");
        assert_eq!(r.claim_author.as_deref(), Some("Someone"));
        assert_eq!(r.id.len(), 16);
    }

    #[test]
    fn fieldless_entry_is_rejected_not_dropped() {
        let body = format!("{ENTRY}\n{{\"unrelated\": 1}}\n");
        let (_d, path) = write("feed.jsonl", &body);
        let ingest = ingest_feed(&path).unwrap();
        assert_eq!(ingest.records.len(), 1);
        assert_eq!(ingest.rejected.len(), 1);
        assert_eq!(ingest.rejected[0].position, 2);
    }

    #[test]
    fn nested_objects_and_bad_lines() {
        let nested = r#"{"claimReviewed":"x","reviewRating":{"alternateName":"Mostly True","author":{"name":"A. Person"}},"author":{"name":"PolitiFact"}}"#;
        let body = format!("{nested}\nnot json\n[1,2]\n");
        let (_d, path) = write("feed.jsonl", &body);
        let ingest = ingest_feed(&path).unwrap();
        assert_eq!(ingest.records.len(), 1);
        assert_eq!(ingest.records[0].raw_verdict, "Mostly True");
        assert_eq!(ingest.records[0].claim_author.as_deref(), Some("A. Person"));
        assert_eq!(ingest.records[0].fact_checker, "PolitiFact");
        assert_eq!(ingest.rejected.len(), 2);
    }

    #[test]
    fn csv_feed() {
        let body = "claimReviewed,datePublished,url,reviewRating.alternateName,author.name,language,reviewRating.author.name\n\
                    \"A claim, with comma\",2019-07-04T10:00:00Z,https://www.factcheck.org/a,Pants on Fire,FactCheck.org,en,\n\
                    only,two\n";
        let (_d, path) = write("feed.csv", body);
        let ingest = ingest_feed(&path).unwrap();
        assert_eq!(ingest.records.len(), 1);
        assert_eq!(ingest.records[0].claim_text, "A claim, with comma");
        assert_eq!(ingest.records[0].review_date, NaiveDate::from_ymd_opt(2019, 7, 4));
        assert_eq!(ingest.records[0].claim_author, None);
        assert_eq!(ingest.rejected.len(), 1);
    }

    #[test]
    fn missing_and_corrupt_files() {
        assert!(matches!(
            ingest_feed(Path::new("/no/such/feed.jsonl")),
            Err(CorpusError::MissingFile(_))
        ));
        let (_d, path) = write("feed.json", "[{\"claimReviewed\": ");
        assert!(matches!(ingest_feed(&path), Err(CorpusError::Corrupt(_))));
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("feed.jsonl");
        fs::write(&bin, [0xff, 0xfe, 0x00]).unwrap();
        assert!(matches!(ingest_feed(&bin), Err(CorpusError::Corrupt(_))));
        let (_d2, csv_path) = write("feed.csv", "a,b\n1,2\n");
        assert!(matches!(ingest_feed(&csv_path), Err(CorpusError::Corrupt(_))));
    }

    #[test]
    fn date_formats() {
        assert_eq!(parse_date("2021-02-03"), NaiveDate::from_ymd_opt(2021, 2, 3));
        assert_eq!(parse_date("2021-02-03T23:30:00+05:00"), NaiveDate::from_ymd_opt(2021, 2, 3));
        assert_eq!(parse_date("2021-02-03 08:00:00"), NaiveDate::from_ymd_opt(2021, 2, 3));
        assert_eq!(parse_date("yesterday"), None);
    }
}
