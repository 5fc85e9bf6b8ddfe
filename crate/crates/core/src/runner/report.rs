use std::collections::HashMap;
use std::fs::{self, File};
use std::path::Path;

use chrono::NaiveDate;
use serde_json::Value;

use super::record::RunRecord;
use super::{RunError, PER_CONFIG_CSV, REPORT_JSON, REPORT_TXT};
use crate::corpus::{ClaimRecord, VerdictLabel};
use crate::eval::{build_report_with_splits, render_table, write_per_config_csv, ConfigReport, EvalReport, TaskReport};
use crate::verdict::{coerce_score, VerdictResponse};

fn report_of(rows: &[&RunRecord]) -> Result<EvalReport, RunError> {
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.review_date).collect();
    let preds: Vec<VerdictResponse> = rows.iter().map(|r| r.verdict.clone()).collect();
    let golds: Vec<VerdictLabel> = rows.iter().map(|r| r.gold).collect();
    Ok(build_report_with_splits(&dates, &preds, &golds)?)
}

/// Aggregate report over all records plus one report per configuration,
/// in `config_order` (configurations not listed follow in first-seen order).
pub fn task_report(task: &str, records: &[RunRecord], config_order: &[String]) -> Result<TaskReport, RunError> {
    let mut order: Vec<String> = config_order.to_vec();
    for r in records {
        if !order.contains(&r.config) {
            order.push(r.config.clone());
        }
    }
    let mut per_config = Vec::new();
    for config in order {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.config == config).collect();
        if rows.is_empty() {
            continue;
        }
        per_config.push(ConfigReport { config, report: report_of(&rows)? });
    }
    let all: Vec<&RunRecord> = records.iter().collect();
    Ok(TaskReport {
        task: task.to_string(),
        records: records.len(),
        overall: report_of(&all)?,
        per_config,
    })
}

/// Writes `report.json`, `report.txt` and `per_config.csv` into `dir`.
pub fn write_reports(dir: &Path, report: &TaskReport) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let json_path = dir.join(REPORT_JSON);
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    fs::write(&json_path, json + "\n").map_err(|e| RunError::io(&json_path, e))?;
    let txt_path = dir.join(REPORT_TXT);
    fs::write(&txt_path, render_table(report)).map_err(|e| RunError::io(&txt_path, e))?;
    let csv_path = dir.join(PER_CONFIG_CSV);
    let file = File::create(&csv_path).map_err(|e| RunError::io(&csv_path, e))?;
    write_per_config_csv(report, file).map_err(|e| RunError::io(&csv_path, e))
}

/// One prediction of an external classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub claim_id: String,
    pub prediction: VerdictResponse,
}

#[derive(Debug, Clone, Default)]
pub struct BaselineScan {
    pub rows: Vec<BaselineRow>,
    /// 1-based numbers of lines that could not be read.
    pub bad_lines: Vec<usize>,
}

fn label_of(v: &Value) -> Option<VerdictLabel> {
    match v {
        Value::Bool(b) => Some(VerdictLabel::from_bool(*b)),
        Value::Number(n) => match n.as_i64()? {
            1 => Some(VerdictLabel::True),
            0 => Some(VerdictLabel::False),
            _ => None,
        },
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" => Some(VerdictLabel::True),
            "false" | "0" => Some(VerdictLabel::False),
            _ => None,
        },
        _ => None,
    }
}

/// Reads a JSON-lines predictions file. Each line needs `claim_id` (or
/// `id`) and a `score` in 0..=100 and/or a `label` (`"True"`/`"False"`,
/// boolean or 0/1). When both are present the label wins for the class and
/// the score is kept for ROC AUC.
pub fn read_baseline(path: &Path) -> Result<BaselineScan, RunError> {
    let body = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let mut scan = BaselineScan::default();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<Value>(line).ok().and_then(|v| {
            let id = v.get("claim_id").or_else(|| v.get("id"))?;
            let id = id.as_str().map(str::to_string).unwrap_or_else(|| id.to_string());
            let score = v.get("score").and_then(coerce_score);
            let label = v.get("label").or_else(|| v.get("prediction")).and_then(label_of);
            let prediction = match (score, label) {
                (Some(s), None) => VerdictResponse::from_score(line, s, None),
                (s, Some(l)) => VerdictResponse {
                    raw_text: line.to_string(),
                    score: s,
                    explanation: None,
                    label: Some(l),
                    fault_reason: None,
                },
                (None, None) => return None,
            };
            Some(BaselineRow { claim_id: id, prediction })
        });
        match row {
            Some(r) => scan.rows.push(r),
            None => scan.bad_lines.push(idx + 1),
        }
    }
    Ok(scan)
}

/// Scores baseline predictions against the dataset's gold labels. Rows for
/// claims absent from the dataset are ignored; dataset claims without a
/// prediction count as faults.
pub fn baseline_report(dataset: &[ClaimRecord], scan: &BaselineScan) -> Result<TaskReport, RunError> {
    let by_id: HashMap<&str, &VerdictResponse> =
        scan.rows.iter().map(|r| (r.claim_id.as_str(), &r.prediction)).collect();
    let records: Vec<RunRecord> = dataset
        .iter()
        .filter_map(|c| Some((c, c.label?, c.review_date?)))
        .map(|(c, gold, date)| RunRecord {
            task: crate::prompt::Task::FactCheckT3,
            claim_id: c.id.clone(),
            config: "baseline".into(),
            config_digest: String::new(),
            article_id: None,
            prompt_digest: String::new(),
            responses: Vec::new(),
            verdict: by_id
                .get(c.id.as_str())
                .map(|p| (*p).clone())
                .unwrap_or_else(|| VerdictResponse::fault("", crate::verdict::FaultReason::NoJson)),
            gold,
            review_date: date,
            transcript: None,
            started_at: String::new(),
            finished_at: String::new(),
        })
        .collect();
    task_report("baseline", &records, &["baseline".to_string()])
}

/// All parseable records of a log, in file order.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, RunError> {
    let body = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    Ok(body.lines().filter_map(|l| serde_json::from_str(l).ok()).collect())
}
