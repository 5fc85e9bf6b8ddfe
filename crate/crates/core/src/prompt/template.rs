use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::PromptError;
use crate::seed::digest_hex;

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"));

/// Names of all template files, without the `.txt` extension.
pub const TEMPLATE_NAMES: &[&str] = &[
    "role",
    "enrich",
    "task_relatedness",
    "task_verdict",
    "task_factcheck",
    "claim",
    "article",
    "article_summary",
    "examples",
    "example_item",
    "json",
    "final",
    "cot",
    "self_reflection",
    "summary_request",
    "summary_request_generic",
    "evidence",
    "evidence_empty",
    "react_system",
    "react_tool",
    "react_no_tool",
    "react_followup",
];

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../templates/", $name, ".txt")))),*]
    };
}

const SHIPPED: &[(&str, &str)] = shipped!(
    "role",
    "enrich",
    "task_relatedness",
    "task_verdict",
    "task_factcheck",
    "claim",
    "article",
    "article_summary",
    "examples",
    "example_item",
    "json",
    "final",
    "cot",
    "self_reflection",
    "summary_request",
    "summary_request_generic",
    "evidence",
    "evidence_empty",
    "react_system",
    "react_tool",
    "react_no_tool",
    "react_followup",
);

/// A text template with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    text: String,
}

impl Template {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        let text: String = text.into();
        Self {
            name: name.into(),
            text: text.trim_end_matches(['\n', '\r']).to_string(),
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        PLACEHOLDER
            .captures_iter(&self.text)
            .map(|c| c.get(1).expect("group").as_str())
    }

    /// Substitutes placeholders in a single pass, so inserted values are
    /// never re-scanned. A line referring to a value given as `None` is
    /// dropped entirely. A placeholder with no entry at all is an error.
    pub fn render(&self, values: &[(&str, Option<&str>)]) -> Result<String, PromptError> {
        let lookup = |name: &str| values.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
        let mut lines = Vec::new();
        'lines: for line in self.text.split('\n') {
            let mut out = String::with_capacity(line.len());
            let mut last = 0;
            for caps in PLACEHOLDER.captures_iter(line) {
                let whole = caps.get(0).expect("match");
                let name = caps.get(1).expect("group").as_str();
                match lookup(name) {
                    None => {
                        return Err(PromptError::UnresolvedPlaceholder {
                            template: self.name.clone(),
                            placeholder: name.to_string(),
                        })
                    }
                    Some(None) => continue 'lines,
                    Some(Some(value)) => {
                        out.push_str(&line[last..whole.start()]);
                        out.push_str(value);
                        last = whole.end();
                    }
                }
            }
            out.push_str(&line[last..]);
            lines.push(out);
        }
        Ok(lines.join("\n"))
    }
}

/// The full set of prompt building blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, Template>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            templates: SHIPPED
                .iter()
                .map(|(name, text)| (name.to_string(), Template::new(*name, *text)))
                .collect(),
        }
    }
}

impl TemplateSet {
    /// Shipped templates, overridden by any `<name>.txt` present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::default();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| PromptError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                set.templates
                    .insert(name.to_string(), Template::new(*name, text));
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> &Template {
        self.templates
            .get(name)
            .unwrap_or_else(|| panic!("unknown template {name:?}"))
    }

    pub fn set(&mut self, name: &str, text: &str) {
        assert!(TEMPLATE_NAMES.contains(&name), "unknown template {name:?}");
        self.templates.insert(name.to_string(), Template::new(name, text));
    }

    /// Stable digest of every template's text.
    pub fn fingerprint(&self) -> String {
        let parts: Vec<&str> = self
            .templates
            .iter()
            .flat_map(|(k, t)| [k.as_str(), t.text()])
            .collect();
        digest_hex(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_shipped_templates_present() {
        let set = TemplateSet::default();
        for name in TEMPLATE_NAMES {
            assert!(!set.get(name).text().is_empty(), "{name}");
        }
        assert_eq!(SHIPPED.len(), TEMPLATE_NAMES.len());
    }

    #[test]
    fn render_single_pass_and_line_dropping() {
        let t = Template::new("t", "Claim: {claim}\nAuthor: {author}\nEnd");
        let out = t.render(&[("claim", Some("has {author} inside")), ("author", None)]).unwrap();
        assert_eq!(out, "Claim: has {author} inside\nEnd");
        let err = t.render(&[("claim", Some("x"))]).unwrap_err();
        assert!(matches!(err, PromptError::UnresolvedPlaceholder { .. }));
    }

    #[test]
    fn json_braces_are_not_placeholders() {
        let set = TemplateSet::default();
        assert_eq!(set.get("json").placeholders().count(), 0);
        assert!(set.get("json").render(&[]).unwrap().contains("\"score\""));
    }

    #[test]
    fn directory_override_changes_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("role.txt"), "You check facts.\n").unwrap();
        let set = TemplateSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.get("role").text(), "You check facts.");
        assert_ne!(set.fingerprint(), TemplateSet::default().fingerprint());
    }
}
