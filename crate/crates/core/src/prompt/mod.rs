//! Modular prompt construction.
//!
//! Every main prompt is assembled from the same blocks in a fixed order:
//! Role, optional Enrich, Task, the claim with its metadata and context,
//! optional few-shot examples, the JSON output instruction, the Final
//! reminder, and an optional chain-of-thought suffix. Block wording lives in
//! template files (see [`TemplateSet`]).

mod compose;
mod examples;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use compose::{
    compose, render_react_followup, render_react_initial, render_react_system_prompt,
    render_self_reflection, render_summary_request, ComposeInput, Context, ToolInfo,
};
pub use examples::{select_examples, ExampleAnswer, FewShotExample, DEFAULT_EXCERPT_CHARS};
pub use template::{Template, TemplateSet, TEMPLATE_NAMES};

use crate::seed::digest_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Is the article the fact-check of this claim?
    #[serde(rename = "task1")]
    RelatednessT1,
    /// What verdict does the fact-check article give?
    #[serde(rename = "task2")]
    VerdictFromArticleT2,
    /// Is the claim true, possibly using retrieved evidence?
    #[serde(rename = "task3")]
    FactCheckT3,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::RelatednessT1 => "task1",
            Task::VerdictFromArticleT2 => "task2",
            Task::FactCheckT3 => "task3",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "task1" | "t1" | "1" => Ok(Task::RelatednessT1),
            "task2" | "t2" | "2" => Ok(Task::VerdictFromArticleT2),
            "task3" | "t3" | "3" => Ok(Task::FactCheckT3),
            other => Err(PromptError::InvalidSpec(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Approach {
    ZeroShot,
    FewShot,
    ChainOfThought,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::ZeroShot, Approach::FewShot, Approach::ChainOfThought];

    pub fn code(self) -> &'static str {
        match self {
            Approach::ZeroShot => "zs",
            Approach::FewShot => "fs",
            Approach::ChainOfThought => "cot",
        }
    }
}

/// One cell of the prompt matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: Task,
    pub approach: Approach,
    pub enrich: bool,
    pub self_reflection: bool,
    pub summary: bool,
}

impl PromptSpec {
    pub fn neutral(task: Task) -> Self {
        Self {
            task,
            approach: Approach::ZeroShot,
            enrich: false,
            self_reflection: false,
            summary: false,
        }
    }

    /// Short stable name such as `cot+enrich+summary`.
    pub fn key(&self) -> String {
        let mut key = self.approach.code().to_string();
        for (on, name) in [
            (self.enrich, "enrich"),
            (self.self_reflection, "reflect"),
            (self.summary, "summary"),
        ] {
            if on {
                key.push('+');
                key.push_str(name);
            }
        }
        key
    }

    /// Inverse of [`PromptSpec::key`].
    pub fn parse_key(task: Task, key: &str) -> Result<Self, PromptError> {
        let mut parts = key.trim().split('+');
        let approach = match parts.next().unwrap_or("") {
            "zs" => Approach::ZeroShot,
            "fs" => Approach::FewShot,
            "cot" => Approach::ChainOfThought,
            other => return Err(PromptError::InvalidSpec(format!("unknown approach {other:?}"))),
        };
        let mut spec = Self {
            approach,
            ..Self::neutral(task)
        };
        for flag in parts {
            match flag {
                "enrich" => spec.enrich = true,
                "reflect" => spec.self_reflection = true,
                "summary" => spec.summary = true,
                other => return Err(PromptError::InvalidSpec(format!("unknown flag {other:?}"))),
            }
        }
        if task == Task::FactCheckT3 && spec != Self::neutral(task) {
            return Err(PromptError::InvalidSpec(
                "task3 only uses the neutral zero-shot prompt".to_string(),
            ));
        }
        Ok(spec)
    }

    /// Number of endpoint calls one evaluation with this spec makes
    /// (tasks 1 and 2).
    pub fn generation_calls(&self) -> usize {
        1 + usize::from(self.self_reflection) + usize::from(self.summary)
    }
}

/// All prompt specs for a task: the 3 × 2 × 2 × 2 matrix for tasks 1 and 2,
/// the single neutral prompt for task 3.
pub fn enumerate_specs(task: Task) -> Vec<PromptSpec> {
    if task == Task::FactCheckT3 {
        return vec![PromptSpec::neutral(task)];
    }
    let mut specs = Vec::with_capacity(24);
    for approach in Approach::ALL {
        for bits in 0..8u8 {
            specs.push(PromptSpec {
                task,
                approach,
                enrich: bits & 1 != 0,
                self_reflection: bits & 2 != 0,
                summary: bits & 4 != 0,
            });
        }
    }
    specs
}

/// Prompt text ready to send.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub spec: Option<PromptSpec>,
    pub placeholders_filled: bool,
}

impl RenderedPrompt {
    pub(crate) fn new(text: String, spec: Option<PromptSpec>) -> Self {
        Self {
            text,
            spec,
            placeholders_filled: true,
        }
    }

    pub fn digest(&self) -> String {
        digest_hex(&[&self.text])
    }
}

impl AsRef<str> for RenderedPrompt {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("template {template:?} has unresolved placeholder {{{placeholder}}}")]
    UnresolvedPlaceholder { template: String, placeholder: String },
    #[error("missing context: {0}")]
    MissingContext(&'static str),
    #[error("few-shot examples must be given exactly when the approach is FewShot")]
    ExamplesMismatch,
    #[error("no {0} example available besides the record under evaluation")]
    ClassExhausted(&'static str),
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("cannot read template {path}: {reason}")]
    Io { path: String, reason: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn matrix_sizes() {
        for task in [Task::RelatednessT1, Task::VerdictFromArticleT2] {
            let specs = enumerate_specs(task);
            assert_eq!(specs.len(), 24);
            assert_eq!(specs.iter().collect::<HashSet<_>>().len(), 24);
            let keys: HashSet<String> = specs.iter().map(PromptSpec::key).collect();
            assert_eq!(keys.len(), 24);
        }
        let t3 = enumerate_specs(Task::FactCheckT3);
        assert_eq!(t3, vec![PromptSpec::neutral(Task::FactCheckT3)]);
    }

    #[test]
    fn eight_cot_specs_by_enumeration() {
        let cot = enumerate_specs(Task::VerdictFromArticleT2)
            .into_iter()
            .filter(|s| s.approach == Approach::ChainOfThought)
            .count();
        assert_eq!(cot, 8);
    }

    #[test]
    fn keys_round_trip() {
        for spec in enumerate_specs(Task::RelatednessT1) {
            assert_eq!(PromptSpec::parse_key(spec.task, &spec.key()).unwrap(), spec);
        }
        assert!(PromptSpec::parse_key(Task::FactCheckT3, "fs").is_err());
        assert!(PromptSpec::parse_key(Task::RelatednessT1, "zs+bogus").is_err());
        assert_eq!("t2".parse::<Task>().unwrap(), Task::VerdictFromArticleT2);
    }
}
