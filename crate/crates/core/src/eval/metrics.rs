use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::VerdictLabel;
use crate::verdict::VerdictResponse;

/// Binary confusion counts with `True` as the positive class. Predictions
/// without a label are counted as faults and kept out of the four cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub faults: usize,
    pub total: usize,
}

impl ConfusionCounts {
    pub fn scored(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, predicted: Option<VerdictLabel>, gold: VerdictLabel) {
        self.total += 1;
        match (predicted, gold) {
            (None, _) => self.faults += 1,
            (Some(VerdictLabel::True), VerdictLabel::True) => self.tp += 1,
            (Some(VerdictLabel::True), VerdictLabel::False) => self.fp += 1,
            (Some(VerdictLabel::False), VerdictLabel::False) => self.tn += 1,
            (Some(VerdictLabel::False), VerdictLabel::True) => self.fn_ += 1,
        }
    }
}

pub fn confusion(
    predictions: &[VerdictResponse],
    golds: &[VerdictLabel],
) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (p, &g) in predictions.iter().zip(golds) {
        counts.record(p.label, g);
    }
    Ok(counts)
}

/// Precision, recall and F1 for one class; `None` where a denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl ClassMetrics {
    /// `hit` is the class's own true-positive count.
    fn from_counts(hit: usize, false_alarm: usize, miss: usize) -> Self {
        let precision = ratio(hit, hit + false_alarm);
        let recall = ratio(hit, hit + miss);
        // 2TP / (2TP + FP + FN) equals 2PR / (P + R) whenever P + R > 0, and
        // is 0 when both are 0.
        let f1 = match (precision, recall) {
            (Some(_), Some(_)) => ratio(2 * hit, 2 * hit + false_alarm + miss),
            _ => None,
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub accuracy: Option<f64>,
}

pub fn per_class_metrics(counts: &ConfusionCounts) -> PerClassMetrics {
    PerClassMetrics {
        positive: ClassMetrics::from_counts(counts.tp, counts.fp, counts.fn_),
        negative: ClassMetrics::from_counts(counts.tn, counts.fn_, counts.fp),
        accuracy: ratio(counts.tp + counts.tn, counts.scored()),
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Rank-based ROC AUC (Mann–Whitney U with mid-ranks for ties).
pub fn roc_auc(scores: &[i64], golds: &[VerdictLabel]) -> Result<f64, EvalError> {
    if scores.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            golds: golds.len(),
        });
    }
    let positives = golds.iter().filter(|g| g.is_true()).count();
    let negatives = golds.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by_key(|&i| scores[i]);
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end+1 share their mean.
        let mid_rank = (start + end + 2) as f64 / 2.0;
        for &i in &order[start..=end] {
            if golds[i].is_true() {
                positive_rank_sum += mid_rank;
            }
        }
        start = end + 1;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

pub fn fault_rate(predictions: &[VerdictResponse]) -> Result<f64, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let faults = predictions.iter().filter(|p| p.is_fault()).count();
    Ok(faults as f64 / predictions.len() as f64)
}
