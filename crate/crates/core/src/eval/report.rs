use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use super::{ClassMetrics, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub config: String,
    pub report: EvalReport,
}

/// Aggregate and per-configuration reports for one task run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub records: usize,
    pub overall: EvalReport,
    pub per_config: Vec<ConfigReport>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn class_cells(m: &ClassMetrics) -> [String; 3] {
    [cell(m.precision), cell(m.recall), cell(m.f1)]
}

pub fn render_table(report: &TaskReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task: {}  records: {}", report.task, report.records);
    let _ = writeln!(
        out,
        "{:<28} {:>5} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
        "config", "n", "P(T)", "R(T)", "F1(T)", "P(F)", "R(F)", "F1(F)", "acc", "auc", "fault"
    );
    let mut row = |name: &str, r: &EvalReport| {
        let [pp, pr, pf] = class_cells(&r.per_class.positive);
        let [np, nr, nf] = class_cells(&r.per_class.negative);
        let _ = writeln!(
            out,
            "{:<28} {:>5} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
            name,
            r.counts.total,
            pp,
            pr,
            pf,
            np,
            nr,
            nf,
            cell(r.accuracy),
            cell(r.roc_auc),
            cell(r.fault_rate)
        );
    };
    for c in &report.per_config {
        row(&c.config, &c.report);
    }
    row("ALL", &report.overall);
    if let Some(splits) = &report.overall.splits {
        for (period, r) in splits {
            let name = format!("ALL/{}", serde_json::to_value(period).unwrap_or_default().as_str().unwrap_or(""));
            row(&name, r);
        }
    }
    out
}

/// One row per configuration, suitable for plotting per-prompt spreads.
pub fn write_per_config_csv<W: io::Write>(report: &TaskReport, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "config", "n", "faults", "precision_true", "recall_true", "f1_true", "precision_false",
        "recall_false", "f1_false", "accuracy", "roc_auc", "fault_rate",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for c in &report.per_config {
        let r = &c.report;
        w.write_record([
            c.config.clone(),
            r.counts.total.to_string(),
            r.counts.faults.to_string(),
            opt(r.per_class.positive.precision),
            opt(r.per_class.positive.recall),
            opt(r.per_class.positive.f1),
            opt(r.per_class.negative.precision),
            opt(r.per_class.negative.recall),
            opt(r.per_class.negative.f1),
            opt(r.accuracy),
            opt(r.roc_auc),
            opt(r.fault_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::build_report;
    use crate::verdict::VerdictResponse;
    use crate::VerdictLabel;

    #[test]
    fn table_and_csv() {
        let preds = [VerdictResponse::from_score("", 80, None), VerdictResponse::from_score("", 20, None)];
        let r = build_report(&preds, &[VerdictLabel::True, VerdictLabel::False]).unwrap();
        let report = TaskReport {
            task: "task2".into(),
            records: 2,
            overall: r.clone(),
            per_config: vec![ConfigReport { config: "zs".into(), report: r }],
        };
        let table = render_table(&report);
        assert!(table.contains("zs"));
        assert!(table.contains("ALL"));
        let mut buf = Vec::new();
        write_per_config_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("zs,2,0,1,1,1,1,1,1,1,1,0"));
    }
}
