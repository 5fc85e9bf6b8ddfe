//! Fact-check feed ingestion, cleaning, labeling and sampling.

mod clean;
mod feed;
mod language;
mod pairing;
mod sample;
mod verdict;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub use clean::{clean, clean_with_report, CleanReport};
pub use feed::{ingest_feed, FeedFormat, FeedIngest, Rejection};
pub use language::{detect_language, domain_language, text_language};
pub use pairing::{pair_for_task1, Task1Pair};
pub use sample::{stratified_sample, ClassQuota, SampleOutcome, SamplingPlan, Shortfall};
pub use verdict::{label_records, UnmappedReport, VerdictMap};

/// Binary verdict class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VerdictLabel {
    True,
    False,
}

impl VerdictLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictLabel::True => "True",
            VerdictLabel::False => "False",
        }
    }

    pub fn from_bool(value: bool) -> Self {
        if value {
            VerdictLabel::True
        } else {
            VerdictLabel::False
        }
    }

    pub fn is_true(self) -> bool {
        self == VerdictLabel::True
    }
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One fact-checked claim.
///
/// `review_date` is the publication date of the fact-check article. Fields are
/// optional or possibly empty straight out of a feed; [`clean`] guarantees the
/// text fields are nonempty and the date is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim_text: String,
    pub review_date: Option<NaiveDate>,
    #[serde(default)]
    pub claim_author: Option<String>,
    pub fact_check_url: String,
    pub raw_verdict: String,
    #[serde(default)]
    pub label: Option<VerdictLabel>,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub fact_checker: String,
    #[serde(default)]
    pub article_text: Option<String>,
}

impl ClaimRecord {
    pub fn year(&self) -> Option<i32> {
        self.review_date.map(|d| d.year())
    }

    pub fn article(&self) -> Option<&str> {
        self.article_text.as_deref().filter(|a| !a.trim().is_empty())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt feed container: {0}")]
    Corrupt(String),
    #[error("invalid mapping table at line {line}: {reason}")]
    Mapping { line: usize, reason: String },
    #[error("dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },
    #[error("need at least 2 records to pair, got {0}")]
    TooFewForPairing(usize),
    #[error("record {0} has no article text")]
    MissingArticle(String),
    #[error("no record with a different article is available for {0}")]
    NoDistinctArticle(String),
}

/// Reads a JSON-lines file of [`ClaimRecord`]s as written by [`write_dataset`].
pub fn load_dataset(path: &Path) -> Result<Vec<ClaimRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ClaimRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Dataset {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_dataset(path: &Path, records: &[ClaimRecord]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("claim records always serialize");
        writeln!(out, "{line}").map_err(|e| io_error(path, e))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> CorpusError {
    if source.kind() == std::io::ErrorKind::NotFound {
        CorpusError::MissingFile(path.display().to_string())
    } else {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[cfg(test)]
pub(crate) fn record(id: &str, text: &str, date: &str, label: Option<VerdictLabel>) -> ClaimRecord {
    ClaimRecord {
        id: id.to_string(),
        claim_text: text.to_string(),
        review_date: Some(date.parse().unwrap()),
        claim_author: None,
        fact_check_url: format!("https://www.politifact.com/factchecks/{id}/"),
        raw_verdict: "false".to_string(),
        label,
        language: "en".to_string(),
        fact_checker: "PolitiFact".to_string(),
        article_text: Some(format!("Article body for {id}.")),
    }
}
