//! Classification metrics, fault rates and temporal splits.

mod metrics;
mod report;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use metrics::{
    confusion, fault_rate, per_class_metrics, roc_auc, ClassMetrics, ConfusionCounts,
    PerClassMetrics,
};
pub use report::{render_table, write_per_config_csv, ConfigReport, TaskReport};

use crate::corpus::VerdictLabel;
use crate::verdict::VerdictResponse;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{predictions} predictions but {golds} gold labels")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("ROC AUC needs both classes among the gold labels")]
    SingleClass,
    #[error("no predictions")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Pre2024,
    From2024,
}

impl Period {
    pub fn of(date: NaiveDate) -> Self {
        if date < NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date") {
            Period::Pre2024
        } else {
            Period::From2024
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    pub per_class: PerClassMetrics,
    pub accuracy: Option<f64>,
    pub roc_auc: Option<f64>,
    pub fault_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<BTreeMap<Period, EvalReport>>,
}

/// Full report over aligned predictions and gold labels. ROC AUC uses the
/// scores of non-fault predictions and is absent when they cover one class.
pub fn build_report(
    predictions: &[VerdictResponse],
    golds: &[VerdictLabel],
) -> Result<EvalReport, EvalError> {
    let counts = confusion(predictions, golds)?;
    let per_class = per_class_metrics(&counts);
    let (scores, scored_golds): (Vec<i64>, Vec<VerdictLabel>) = predictions
        .iter()
        .zip(golds)
        .filter(|(p, _)| !p.is_fault())
        .filter_map(|(p, &g)| p.score.map(|s| (s, g)))
        .unzip();
    Ok(EvalReport {
        counts,
        accuracy: per_class.accuracy,
        per_class,
        roc_auc: roc_auc(&scores, &scored_golds).ok(),
        fault_rate: fault_rate(predictions).ok(),
        splits: None,
    })
}

/// Reports for claims reviewed before 2024-01-01 and from that date on.
pub fn split_by_period(
    dates: &[NaiveDate],
    predictions: &[VerdictResponse],
    golds: &[VerdictLabel],
) -> Result<BTreeMap<Period, EvalReport>, EvalError> {
    if dates.len() != predictions.len() || predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len().min(dates.len()),
        });
    }
    let mut out = BTreeMap::new();
    for period in [Period::Pre2024, Period::From2024] {
        let (p, g): (Vec<VerdictResponse>, Vec<VerdictLabel>) = dates
            .iter()
            .zip(predictions.iter().zip(golds))
            .filter(|(d, _)| Period::of(**d) == period)
            .map(|(_, (p, g))| (p.clone(), *g))
            .unzip();
        out.insert(period, build_report(&p, &g)?);
    }
    Ok(out)
}

/// [`build_report`] plus period splits.
pub fn build_report_with_splits(
    dates: &[NaiveDate],
    predictions: &[VerdictResponse],
    golds: &[VerdictLabel],
) -> Result<EvalReport, EvalError> {
    let mut report = build_report(predictions, golds)?;
    report.splits = Some(split_by_period(dates, predictions, golds)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerdictLabel::{False as F, True as T};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn boundary_date_goes_to_2024() {
        assert_eq!(Period::of(d("2023-12-31")), Period::Pre2024);
        assert_eq!(Period::of(d("2024-01-01")), Period::From2024);
    }

    #[test]
    fn splits_partition_the_input() {
        let preds = vec![
            VerdictResponse::from_score("", 90, None),
            VerdictResponse::from_score("", 10, None),
            VerdictResponse::from_score("", 70, None),
        ];
        let dates = [d("2019-05-01"), d("2024-01-01"), d("2018-01-01")];
        let splits = split_by_period(&dates, &preds, &[T, F, F]).unwrap();
        assert_eq!(splits[&Period::Pre2024].counts.total, 2);
        assert_eq!(splits[&Period::From2024].counts.total, 1);

        let only_old = split_by_period(&dates[..1], &preds[..1], &[T]).unwrap();
        let empty = &only_old[&Period::From2024];
        assert_eq!(empty.counts.total, 0);
        assert_eq!(empty.accuracy, None);
        assert_eq!(empty.fault_rate, None);
    }

    #[test]
    fn report_excludes_faults_from_auc() {
        let preds = vec![
            VerdictResponse::from_score("", 90, None),
            VerdictResponse::from_score("", 10, None),
            VerdictResponse::from_score("", 150, None),
        ];
        let r = build_report(&preds, &[T, F, F]).unwrap();
        assert_eq!(r.roc_auc, Some(1.0));
        assert_eq!(r.counts.faults, 1);
        assert!((r.fault_rate.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
