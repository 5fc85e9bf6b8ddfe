use std::collections::HashSet;

use chrono::NaiveDate;

use super::{detect_language, ClaimRecord};

const TARGET_LANGUAGE: &str = "en";

/// Why records were removed by [`clean_with_report`].
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct CleanReport {
    pub missing_fields: usize,
    pub future_dated: usize,
    pub language_undetermined: usize,
    pub non_english: usize,
    pub duplicates: usize,
}

impl CleanReport {
    pub fn removed(&self) -> usize {
        self.missing_fields
            + self.future_dated
            + self.language_undetermined
            + self.non_english
            + self.duplicates
    }
}

pub fn clean(records: Vec<ClaimRecord>, today: NaiveDate) -> Vec<ClaimRecord> {
    clean_with_report(records, today).0
}

/// Drops incomplete, future-dated, non-English and duplicate records.
///
/// Duplicates are identified by the (claim text, review date, URL) triple;
/// the first occurrence is kept. Surviving records carry `language = "en"`.
pub fn clean_with_report(
    records: Vec<ClaimRecord>,
    today: NaiveDate,
) -> (Vec<ClaimRecord>, CleanReport) {
    let mut report = CleanReport::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(records.len());

    for mut record in records {
        record.claim_text = record.claim_text.trim().to_string();
        record.raw_verdict = record.raw_verdict.trim().to_string();
        record.fact_check_url = record.fact_check_url.trim().to_string();

        let Some(date) = record.review_date else {
            report.missing_fields += 1;
            continue;
        };
        if record.claim_text.is_empty()
            || record.raw_verdict.is_empty()
            || record.fact_check_url.is_empty()
        {
            report.missing_fields += 1;
            continue;
        }
        if date > today {
            report.future_dated += 1;
            continue;
        }
        let declared = record.language.trim().to_ascii_lowercase();
        if !declared.is_empty() && declared != TARGET_LANGUAGE {
            report.non_english += 1;
            continue;
        }
        match detect_language(&record.claim_text, &record.fact_check_url) {
            None => {
                report.language_undetermined += 1;
                continue;
            }
            Some(code) if code != TARGET_LANGUAGE => {
                report.non_english += 1;
                continue;
            }
            Some(code) => record.language = code.to_string(),
        }
        let key = (record.claim_text.clone(), date, record.fact_check_url.clone());
        if !seen.insert(key) {
            report.duplicates += 1;
            continue;
        }
        kept.push(record);
    }
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record;

    fn today() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 6, 30).unwrap()
    }

    const TEXT: &str = "The senator claimed that taxes on groceries doubled last year.";

    #[test]
    fn future_dated_removed() {
        let mut r = record("a", TEXT, "2025-06-30", None);
        r.raw_verdict = "false".into();
        let (kept, report) = clean_with_report(vec![r], today());
        assert!(kept.is_empty());
        assert_eq!(report.future_dated, 1);
    }

    #[test]
    fn identical_records_collapse() {
        let r = record("a", TEXT, "2020-06-30", None);
        let kept = clean(vec![r.clone(), r], today());
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn missing_verdict_removed() {
        let mut r = record("a", TEXT, "2020-06-30", None);
        r.raw_verdict = "   ".into();
        let (kept, report) = clean_with_report(vec![r], today());
        assert!(kept.is_empty());
        assert_eq!(report.missing_fields, 1);
    }

    #[test]
    fn language_disagreement_removed() {
        let mut r = record("a", TEXT, "2020-06-30", None);
        r.fact_check_url = "https://pagellapolitica.it/articoli/x".into();
        let (kept, report) = clean_with_report(vec![r], today());
        assert!(kept.is_empty());
        assert_eq!(report.language_undetermined, 1);
    }

    #[test]
    fn declared_foreign_language_removed() {
        let mut r = record("a", TEXT, "2020-06-30", None);
        r.language = "es".into();
        let (_, report) = clean_with_report(vec![r], today());
        assert_eq!(report.non_english, 1);
    }

    #[test]
    fn idempotent() {
        let mut a = record("a", &format!("  {TEXT} "), "2020-06-30", None);
        a.language.clear();
        let b = record("b", TEXT, "2030-01-01", None);
        let once = clean(vec![a.clone(), b, a], today());
        let twice = clean(once.clone(), today());
        assert_eq!(once, twice);
        assert_eq!(once[0].language, "en");
        assert_eq!(once[0].claim_text, TEXT);
    }
}
