use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{ClaimRecord, VerdictLabel};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassQuota {
    pub true_count: usize,
    pub false_count: usize,
}

impl ClassQuota {
    pub fn new(true_count: usize, false_count: usize) -> Self {
        Self {
            true_count,
            false_count,
        }
    }

    fn get(&self, label: VerdictLabel) -> usize {
        match label {
            VerdictLabel::True => self.true_count,
            VerdictLabel::False => self.false_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub per_year_quota: BTreeMap<i32, ClassQuota>,
    pub seed: u64,
}

impl SamplingPlan {
    /// 25 True + 25 False per year for 2013–2023, and 30 True + 470 False
    /// for 2024.
    pub fn standard(seed: u64) -> Self {
        let mut per_year_quota: BTreeMap<i32, ClassQuota> =
            (2013..=2023).map(|y| (y, ClassQuota::new(25, 25))).collect();
        per_year_quota.insert(2024, ClassQuota::new(30, 470));
        Self {
            per_year_quota,
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.per_year_quota
            .values()
            .map(|q| q.true_count + q.false_count)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub year: i32,
    pub label: VerdictLabel,
    pub requested: usize,
    pub available: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SampleOutcome {
    pub records: Vec<ClaimRecord>,
    pub shortfalls: Vec<Shortfall>,
}

/// Draws each (year, class) quota uniformly at random without replacement.
///
/// Candidates are ordered by id before drawing and each cell uses its own
/// derived generator, so the result depends only on the candidate set, the
/// plan and the seed. Short cells contribute everything they have and are
/// reported. Output is grouped by year, True before False.
pub fn stratified_sample(records: &[ClaimRecord], plan: &SamplingPlan) -> SampleOutcome {
    let mut cells: BTreeMap<(i32, VerdictLabel), Vec<&ClaimRecord>> = BTreeMap::new();
    let mut seen_ids = HashSet::new();
    for record in records {
        let (Some(year), Some(label)) = (record.year(), record.label) else {
            continue;
        };
        if !plan.per_year_quota.contains_key(&year) || !seen_ids.insert(record.id.as_str()) {
            continue;
        }
        cells.entry((year, label)).or_default().push(record);
    }

    let mut outcome = SampleOutcome::default();
    for (&year, quota) in &plan.per_year_quota {
        for label in [VerdictLabel::True, VerdictLabel::False] {
            let requested = quota.get(label);
            let mut pool = cells.remove(&(year, label)).unwrap_or_default();
            pool.sort_by(|a, b| a.id.cmp(&b.id));
            if pool.len() <= requested {
                if pool.len() < requested {
                    outcome.shortfalls.push(Shortfall {
                        year,
                        label,
                        requested,
                        available: pool.len(),
                    });
                }
                outcome.records.extend(pool.into_iter().cloned());
                continue;
            }
            let mut rng = rng_for(plan.seed, &["sample", &year.to_string(), label.as_str()]);
            let mut picked = index::sample(&mut rng, pool.len(), requested).into_vec();
            picked.sort_unstable();
            outcome
                .records
                .extend(picked.into_iter().map(|i| pool[i].clone()));
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record;

    fn pool(year: i32, trues: usize, falses: usize) -> Vec<ClaimRecord> {
        let mut out = Vec::new();
        for i in 0..trues {
            out.push(record(&format!("{year}-t{i}"), "c", &format!("{year}-03-01"), Some(VerdictLabel::True)));
        }
        for i in 0..falses {
            out.push(record(&format!("{year}-f{i}"), "c", &format!("{year}-03-01"), Some(VerdictLabel::False)));
        }
        out
    }

    #[test]
    fn standard_plan_quotas() {
        let plan = SamplingPlan::standard(1);
        assert_eq!(plan.total(), 1050);
        let mut records = Vec::new();
        for year in 2013..=2023 {
            records.extend(pool(year, 40, 60));
        }
        records.extend(pool(2024, 30, 900));
        let out = stratified_sample(&records, &plan);
        assert!(out.shortfalls.is_empty());
        for year in 2013..=2023 {
            let yr: Vec<_> = out.records.iter().filter(|r| r.year() == Some(year)).collect();
            assert_eq!(yr.len(), 50);
            assert_eq!(yr.iter().filter(|r| r.label == Some(VerdictLabel::True)).count(), 25);
        }
        assert_eq!(out.records.iter().filter(|r| r.year() == Some(2024)).count(), 500);
    }

    #[test]
    fn shortfall_reported_not_padded() {
        let mut plan = SamplingPlan::standard(3);
        plan.per_year_quota.retain(|y, _| *y == 2024);
        let out = stratified_sample(&pool(2024, 12, 900), &plan);
        assert_eq!(out.records.len(), 12 + 470);
        assert_eq!(
            out.shortfalls,
            vec![Shortfall { year: 2024, label: VerdictLabel::True, requested: 30, available: 12 }]
        );
    }

    #[test]
    fn empty_input_full_shortfall() {
        let plan = SamplingPlan::standard(0);
        let out = stratified_sample(&[], &plan);
        assert!(out.records.is_empty());
        assert_eq!(out.shortfalls.len(), 24);
        assert!(out.shortfalls.iter().all(|s| s.available == 0));
    }

    #[test]
    fn deterministic_and_order_independent() {
        let plan = SamplingPlan::standard(42);
        let records = pool(2015, 80, 80);
        let mut reversed = records.clone();
        reversed.reverse();
        let a = stratified_sample(&records, &plan);
        let b = stratified_sample(&reversed, &plan);
        assert_eq!(a.records, b.records);
        let other = stratified_sample(&records, &SamplingPlan::standard(43));
        assert_ne!(a.records, other.records);
    }
}
