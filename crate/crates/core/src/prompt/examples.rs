use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{PromptError, Task, TemplateSet};
use crate::corpus::{ClaimRecord, VerdictLabel};
use crate::fetch::truncate_at_whitespace;
use crate::seed::rng_for;

/// Article excerpts in few-shot examples are cut to this many characters.
pub const DEFAULT_EXCERPT_CHARS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleAnswer {
    pub score: i64,
    pub explanation: String,
}

/// A solved example. `label` is the class the example demonstrates
/// (for task 1, True means "related").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub claim: String,
    pub article_excerpt: String,
    pub label: VerdictLabel,
    pub gold: ExampleAnswer,
}

impl FewShotExample {
    pub fn render(&self, templates: &TemplateSet) -> Result<String, PromptError> {
        let answer = serde_json::json!({
            "score": self.gold.score,
            "explanation": self.gold.explanation,
        })
        .to_string();
        templates.get("example_item").render(&[
            ("claim", Some(&self.claim)),
            ("article", Some(&self.article_excerpt)),
            ("answer", Some(&answer)),
        ])
    }
}

fn excerpt(text: &str, cap: usize) -> String {
    truncate_at_whitespace(text.trim(), cap).0
}

fn example(claim: &ClaimRecord, article: &str, label: VerdictLabel, explanation: &str, cap: usize) -> FewShotExample {
    FewShotExample {
        claim: claim.claim_text.clone(),
        article_excerpt: excerpt(article, cap),
        label,
        gold: ExampleAnswer {
            score: if label.is_true() { 100 } else { 0 },
            explanation: explanation.to_string(),
        },
    }
}

/// Picks one example per class from `dataset`, never using the record
/// `exclude_id`. Task 2 shows one True and one False record with their own
/// articles; task 1 shows one claim with its own article and one claim with
/// a different record's article. The choice depends only on the seed, the
/// task and `exclude_id`. The True-class example comes first.
pub fn select_examples(
    task: Task,
    dataset: &[ClaimRecord],
    exclude_id: &str,
    seed: u64,
    excerpt_cap: usize,
) -> Result<Vec<FewShotExample>, PromptError> {
    let mut rng = rng_for(seed, &["few-shot", task.as_str(), exclude_id]);
    let usable: Vec<&ClaimRecord> = dataset
        .iter()
        .filter(|r| r.id != exclude_id && r.article().is_some_and(|a| !a.trim().is_empty()))
        .collect();
    match task {
        Task::FactCheckT3 => Err(PromptError::InvalidSpec("task3 has no few-shot examples".into())),
        Task::VerdictFromArticleT2 => {
            let pick = |label: VerdictLabel, rng: &mut _| {
                let pool: Vec<&&ClaimRecord> = usable.iter().filter(|r| r.label == Some(label)).collect();
                pool.choose(rng).map(|r| **r)
            };
            let t = pick(VerdictLabel::True, &mut rng).ok_or(PromptError::ClassExhausted("True"))?;
            let f = pick(VerdictLabel::False, &mut rng).ok_or(PromptError::ClassExhausted("False"))?;
            Ok(vec![
                example(t, t.article().unwrap_or_default(), VerdictLabel::True,
                    "The article concludes that the statement is accurate.", excerpt_cap),
                example(f, f.article().unwrap_or_default(), VerdictLabel::False,
                    "The article concludes that the statement is inaccurate or misleading.", excerpt_cap),
            ])
        }
        Task::RelatednessT1 => {
            let related = *usable.choose(&mut rng).ok_or(PromptError::ClassExhausted("related"))?;
            // Unrelated: a claim paired with an article that is not its own.
            let mut pairs = Vec::new();
            for a in &usable {
                for b in &usable {
                    if a.id != b.id && a.article() != b.article() {
                        pairs.push((*a, *b));
                    }
                }
            }
            let (claim, other) = *pairs.choose(&mut rng).ok_or(PromptError::ClassExhausted("unrelated"))?;
            Ok(vec![
                example(related, related.article().unwrap_or_default(), VerdictLabel::True,
                    "The article examines exactly this statement.", excerpt_cap),
                example(claim, other.article().unwrap_or_default(), VerdictLabel::False,
                    "The article is about a different statement.", excerpt_cap),
            ])
        }
    }
}
