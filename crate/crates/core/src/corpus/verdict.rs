use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::{io_error, ClaimRecord, CorpusError, VerdictLabel};

const SHIPPED_TABLE: &str = include_str!("../../data/verdicts.tsv");

/// Case-insensitive lookup table from raw fact-checker ratings to binary
/// labels, loaded from a two-column tab-separated file.
#[derive(Debug, Clone, Default)]
pub struct VerdictMap {
    entries: HashMap<String, VerdictLabel>,
}

impl VerdictMap {
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_TABLE).expect("shipped verdict table is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let body = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::parse(&body)
    }

    /// Parses `verdict<TAB>True|False` lines. Blank lines and `#` comments are
    /// skipped. A key listed under both labels is an error.
    pub fn parse(body: &str) -> Result<Self, CorpusError> {
        let mut entries = HashMap::new();
        for (idx, line) in body.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (key, value) = line.rsplit_once('\t').ok_or_else(|| CorpusError::Mapping {
                line: line_no,
                reason: "expected two tab-separated columns".to_string(),
            })?;
            let label = match value.trim().to_ascii_lowercase().as_str() {
                "true" => VerdictLabel::True,
                "false" => VerdictLabel::False,
                other => {
                    return Err(CorpusError::Mapping {
                        line: line_no,
                        reason: format!("label must be True or False, got {other:?}"),
                    })
                }
            };
            let key = normalize(key);
            if key.is_empty() {
                return Err(CorpusError::Mapping {
                    line: line_no,
                    reason: "empty verdict".to_string(),
                });
            }
            if let Some(prev) = entries.insert(key.clone(), label) {
                if prev != label {
                    return Err(CorpusError::Mapping {
                        line: line_no,
                        reason: format!("{key:?} mapped to both classes"),
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    /// Adds or overrides entries from `other`.
    pub fn extend(&mut self, other: VerdictMap) {
        self.entries.extend(other.entries);
    }

    pub fn lookup(&self, raw_verdict: &str) -> Option<VerdictLabel> {
        self.entries.get(&normalize(raw_verdict)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Lowercase, collapse whitespace, drop surrounding quotes and trailing
/// sentence punctuation.
fn normalize(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_matches(|c| matches!(c, '"' | '\'' | '“' | '”'))
        .trim_end_matches(['.', '!'])
        .trim()
        .to_string()
}

/// Verdicts with no table entry, with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct UnmappedReport {
    pub counts: BTreeMap<String, usize>,
}

impl UnmappedReport {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Assigns labels; records whose verdict is not in the table are excluded
/// and counted.
pub fn label_records(
    records: Vec<ClaimRecord>,
    map: &VerdictMap,
) -> (Vec<ClaimRecord>, UnmappedReport) {
    let mut report = UnmappedReport::default();
    let mut labeled = Vec::with_capacity(records.len());
    for mut record in records {
        match map.lookup(&record.raw_verdict) {
            Some(label) => {
                record.label = Some(label);
                labeled.push(record);
            }
            None => *report.counts.entry(normalize(&record.raw_verdict)).or_default() += 1,
        }
    }
    (labeled, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record;

    #[test]
    fn known_ratings() {
        let map = VerdictMap::shipped();
        assert_eq!(map.lookup("mostly true"), Some(VerdictLabel::True));
        assert_eq!(map.lookup("Mostly TRUE"), Some(VerdictLabel::True));
        assert_eq!(map.lookup("mixture"), Some(VerdictLabel::False));
        assert_eq!(map.lookup("Quattro Pinocchio"), Some(VerdictLabel::False));
        assert_eq!(map.lookup("Geppetto mark"), Some(VerdictLabel::True));
        assert_eq!(map.lookup("Correct Attribution"), Some(VerdictLabel::True));
        assert_eq!(map.lookup("Pants on Fire!"), Some(VerdictLabel::False));
        assert_eq!(map.lookup("unproven"), Some(VerdictLabel::False));
        assert_eq!(map.lookup("legend"), Some(VerdictLabel::False));
        assert_eq!(map.lookup("something nobody says"), None);
    }

    #[test]
    fn conflicting_table_rejected() {
        let err = VerdictMap::parse("real\tTrue\nReal\tFalse\n").unwrap_err();
        assert!(matches!(err, CorpusError::Mapping { line: 2, .. }));
        assert!(VerdictMap::parse("no tab here\n").is_err());
        assert!(VerdictMap::parse("x\tmaybe\n").is_err());
    }

    #[test]
    fn user_extension_overrides() {
        let mut map = VerdictMap::shipped();
        map.extend(VerdictMap::parse("# custom\nbasically right\tTrue\n").unwrap());
        assert_eq!(map.lookup("Basically right."), Some(VerdictLabel::True));
    }

    #[test]
    fn unmapped_are_excluded_and_counted() {
        let mut a = record("a", "x", "2020-01-01", None);
        a.raw_verdict = "Mostly True".into();
        let mut b = record("b", "y", "2020-01-01", None);
        b.raw_verdict = "Weird rating".into();
        let c = b.clone();
        let (labeled, report) = label_records(vec![a, b, c], &VerdictMap::shipped());
        assert_eq!(labeled.len(), 1);
        assert_eq!(labeled[0].label, Some(VerdictLabel::True));
        assert_eq!(report.counts.get("weird rating"), Some(&2));
        assert_eq!(report.total(), 2);
    }
}
