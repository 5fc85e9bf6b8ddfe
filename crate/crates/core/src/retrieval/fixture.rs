use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{DateWindow, RetrievalError, SearchProvider, SearchResult, SourceKind};

/// Canned search results for offline runs, read from a JSON object mapping
/// query to a result list. The key `"*"` answers unknown queries; without
/// it unknown queries get no results.
#[derive(Debug, Clone)]
pub struct FixtureSearch {
    kind: SourceKind,
    results: BTreeMap<String, Vec<SearchResult>>,
}

fn normalize(query: &str) -> String {
    query.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl FixtureSearch {
    pub fn new(kind: SourceKind, results: BTreeMap<String, Vec<SearchResult>>) -> Self {
        Self {
            kind,
            results: results.into_iter().map(|(k, v)| (normalize(&k), v)).collect(),
        }
    }

    pub fn load(kind: SourceKind, path: &Path) -> Result<Self, RetrievalError> {
        let body = fs::read_to_string(path)
            .map_err(|e| RetrievalError::Config(format!("{}: {e}", path.display())))?;
        let results = serde_json::from_str(&body)
            .map_err(|e| RetrievalError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self::new(kind, results))
    }
}

impl SearchProvider for FixtureSearch {
    fn kind(&self) -> SourceKind {
        self.kind
    }

    fn search(
        &self,
        query: &str,
        max_results: usize,
        _window: Option<&DateWindow>,
    ) -> Result<Vec<SearchResult>, RetrievalError> {
        let hits = self
            .results
            .get(&normalize(query))
            .or_else(|| self.results.get("*"))
            .cloned()
            .unwrap_or_default();
        Ok(hits.into_iter().take(max_results).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_whitespace_and_case_insensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("search.json");
        fs::write(
            &path,
            r#"{"Eiffel Tower": [{"title":"T","url":"https://x.example","snippet":"s"}],
                "*": [{"title":"D","url":"https://d.example"}]}"#,
        )
        .unwrap();
        let f = FixtureSearch::load(SourceKind::Encyclopedia, &path).unwrap();
        assert_eq!(f.search("  eiffel   tower ", 3, None).unwrap()[0].title, "T");
        assert_eq!(f.search("other", 3, None).unwrap()[0].title, "D");
        assert_eq!(f.kind(), SourceKind::Encyclopedia);
    }
}
