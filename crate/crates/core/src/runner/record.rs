use std::collections::HashMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::RunError;
use crate::agent::EpisodeTranscript;
use crate::corpus::VerdictLabel;
use crate::prompt::Task;
use crate::verdict::VerdictResponse;

/// One evaluated (claim, configuration) unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: Task,
    pub claim_id: String,
    pub config: String,
    pub config_digest: String,
    /// Record whose article was shown (task 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_id: Option<String>,
    pub prompt_digest: String,
    /// Raw endpoint replies in call order; `None` marks a failed call.
    pub responses: Vec<Option<String>>,
    pub verdict: VerdictResponse,
    pub gold: VerdictLabel,
    pub review_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<EpisodeTranscript>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunRecord {
    pub fn key(&self) -> (String, String) {
        (self.claim_id.clone(), self.config.clone())
    }
}

/// A log line that was set aside instead of being reused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub line: usize,
    pub reason: String,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct LogScan {
    /// Reusable records keyed by (claim id, config key).
    pub completed: HashMap<(String, String), RunRecord>,
    pub quarantined: Vec<Quarantined>,
}

/// Reads an existing log. A record is reusable when `expected_digest`
/// returns its digest for its key; unparseable lines, unknown keys, stale
/// digests and repeated keys are quarantined.
pub fn read_log(
    path: &Path,
    expected_digest: impl Fn(&str, &str) -> Option<String>,
) -> Result<LogScan, RunError> {
    let mut scan = LogScan::default();
    let body = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(scan),
        Err(e) => return Err(RunError::io(path, e)),
    };
    let body = String::from_utf8_lossy(&body);
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut quarantine = |reason: String| {
            scan.quarantined.push(Quarantined { line: idx + 1, reason, text: line.to_string() })
        };
        let record: RunRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                quarantine(format!("unparseable: {e}"));
                continue;
            }
        };
        match expected_digest(&record.claim_id, &record.config) {
            None => quarantine("unit not part of this run".into()),
            Some(d) if d != record.config_digest => quarantine("configuration changed".into()),
            Some(_) if scan.completed.contains_key(&record.key()) => quarantine("duplicate unit".into()),
            Some(_) => {
                scan.completed.insert(record.key(), record);
            }
        }
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, digest: &str) -> RunRecord {
        RunRecord {
            task: Task::VerdictFromArticleT2,
            claim_id: id.into(),
            config: "zs".into(),
            config_digest: digest.into(),
            article_id: None,
            prompt_digest: "p".into(),
            responses: vec![Some("{\"score\": 1}".into())],
            verdict: VerdictResponse::from_score("{\"score\": 1}", 1, None),
            gold: VerdictLabel::False,
            review_date: "2020-01-01".parse().unwrap(),
            transcript: None,
            started_at: "t".into(),
            finished_at: "t".into(),
        }
    }

    #[test]
    fn scan_sorts_lines_into_reusable_and_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let lines = [
            serde_json::to_string(&rec("a", "d1")).unwrap(),
            "{\"truncated\": ".to_string(),
            serde_json::to_string(&rec("b", "old")).unwrap(),
            serde_json::to_string(&rec("a", "d1")).unwrap(),
            serde_json::to_string(&rec("zz", "d1")).unwrap(),
        ];
        fs::write(&path, lines.join("\n")).unwrap();
        let scan = read_log(&path, |id, _| (id != "zz").then(|| "d1".to_string())).unwrap();
        assert_eq!(scan.completed.len(), 1);
        assert!(scan.completed.contains_key(&("a".to_string(), "zs".to_string())));
        let reasons: Vec<_> = scan.quarantined.iter().map(|q| q.line).collect();
        assert_eq!(reasons, [2, 3, 4, 5]);
        assert!(read_log(&dir.path().join("missing"), |_, _| None).unwrap().completed.is_empty());
    }
}
