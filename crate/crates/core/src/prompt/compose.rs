use chrono::NaiveDate;

use super::{Approach, FewShotExample, PromptError, PromptSpec, RenderedPrompt, Task, TemplateSet};
use crate::retrieval::Evidence;

const BLOCK_SEPARATOR: &str = "\n\n";

/// What the model is shown next to the claim.
#[derive(Debug, Clone, Copy)]
pub enum Context<'a> {
    /// Fact-check article text, or its summary when the spec has `summary`.
    Article(&'a str),
    /// Retrieved evidence (task 3).
    Evidence(&'a Evidence),
    None,
}

#[derive(Debug, Clone, Copy)]
pub struct ComposeInput<'a> {
    pub claim: &'a str,
    pub date: NaiveDate,
    pub author: Option<&'a str>,
    pub context: Context<'a>,
    pub examples: Option<&'a [FewShotExample]>,
}

fn claim_block(t: &TemplateSet, claim: &str, date: NaiveDate, author: Option<&str>) -> Result<String, PromptError> {
    let date = date.format("%Y-%m-%d").to_string();
    let author = author.map(str::trim).filter(|a| !a.is_empty());
    t.get("claim")
        .render(&[("claim", Some(claim)), ("date", Some(&date)), ("author", author)])
}

fn evidence_block(t: &TemplateSet, evidence: &Evidence) -> Result<String, PromptError> {
    if evidence.items.is_empty() {
        t.get("evidence_empty").render(&[("query", Some(&evidence.query))])
    } else {
        let rendered = evidence.render();
        t.get("evidence")
            .render(&[("query", Some(&evidence.query)), ("evidence", Some(&rendered))])
    }
}

/// Assembles a main prompt for one prompt-matrix cell.
pub fn compose(
    templates: &TemplateSet,
    spec: &PromptSpec,
    input: &ComposeInput<'_>,
) -> Result<RenderedPrompt, PromptError> {
    if spec.task == Task::FactCheckT3 && *spec != PromptSpec::neutral(Task::FactCheckT3) {
        return Err(PromptError::InvalidSpec(
            "task3 only uses the neutral zero-shot prompt".to_string(),
        ));
    }
    let wants_examples = spec.approach == Approach::FewShot;
    if wants_examples != input.examples.is_some_and(|e| !e.is_empty()) {
        return Err(PromptError::ExamplesMismatch);
    }
    if input.claim.trim().is_empty() {
        return Err(PromptError::EmptyInput("claim"));
    }

    let mut blocks = vec![templates.get("role").render(&[])?];
    if spec.enrich {
        blocks.push(templates.get("enrich").render(&[])?);
    }
    let task_template = match spec.task {
        Task::RelatednessT1 => "task_relatedness",
        Task::VerdictFromArticleT2 => "task_verdict",
        Task::FactCheckT3 => "task_factcheck",
    };
    blocks.push(templates.get(task_template).render(&[])?);
    blocks.push(claim_block(templates, input.claim, input.date, input.author)?);

    match (spec.task, input.context) {
        (Task::FactCheckT3, Context::Evidence(evidence)) => {
            blocks.push(evidence_block(templates, evidence)?)
        }
        (Task::FactCheckT3, Context::None) => {}
        (Task::FactCheckT3, Context::Article(_)) => {
            return Err(PromptError::MissingContext("task3 takes evidence, not an article"))
        }
        (_, Context::Article(article)) if !article.trim().is_empty() => {
            let name = if spec.summary { "article_summary" } else { "article" };
            blocks.push(templates.get(name).render(&[("article", Some(article))])?);
        }
        _ => return Err(PromptError::MissingContext("tasks 1 and 2 need the article text")),
    }

    if let Some(examples) = input.examples {
        let items = examples
            .iter()
            .map(|e| e.render(templates).map(|item| format!("[\n{item}\n]")))
            .collect::<Result<Vec<_>, _>>()?
            .join("\n");
        blocks.push(templates.get("examples").render(&[("examples", Some(&items))])?);
    }

    blocks.push(templates.get("json").render(&[])?);
    blocks.push(templates.get("final").render(&[])?);
    if spec.approach == Approach::ChainOfThought {
        blocks.push(templates.get("cot").render(&[])?);
    }
    Ok(RenderedPrompt::new(blocks.join(BLOCK_SEPARATOR), Some(*spec)))
}

/// Follow-up asking the model to reconsider its previous answer.
pub fn render_self_reflection(
    templates: &TemplateSet,
    previous_prompt: &str,
    previous_answer: &str,
) -> Result<RenderedPrompt, PromptError> {
    if previous_answer.trim().is_empty() {
        return Err(PromptError::EmptyInput("previous answer"));
    }
    let blocks = [
        templates.get("self_reflection").render(&[
            ("previous_prompt", Some(previous_prompt)),
            ("previous_answer", Some(previous_answer)),
        ])?,
        templates.get("json").render(&[])?,
        templates.get("final").render(&[])?,
    ];
    Ok(RenderedPrompt::new(blocks.join(BLOCK_SEPARATOR), None))
}

/// Request for a summary of an article, focused on `claim` when given.
pub fn render_summary_request(
    templates: &TemplateSet,
    article_text: &str,
    claim: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    if article_text.trim().is_empty() {
        return Err(PromptError::EmptyInput("article"));
    }
    let text = match claim.filter(|c| !c.trim().is_empty()) {
        Some(claim) => templates
            .get("summary_request")
            .render(&[("article", Some(article_text)), ("claim", Some(claim))])?,
        None => templates
            .get("summary_request_generic")
            .render(&[("article", Some(article_text))])?,
    };
    Ok(RenderedPrompt::new(text, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToolInfo<'a> {
    pub name: &'a str,
    pub description: &'a str,
}

/// Agent instructions: reply with either an Action or a Final answer JSON
/// object. Without a tool only the Final answer form is offered.
pub fn render_react_system_prompt(
    templates: &TemplateSet,
    tool: Option<ToolInfo<'_>>,
) -> Result<RenderedPrompt, PromptError> {
    let system = templates.get("react_system").render(&[])?;
    let shapes = match tool.filter(|t| !t.description.trim().is_empty()) {
        Some(tool) => templates.get("react_tool").render(&[
            ("tool_name", Some(tool.name)),
            ("tool_description", Some(tool.description)),
        ])?,
        None => templates.get("react_no_tool").render(&[])?,
    };
    Ok(RenderedPrompt::new(
        [system, shapes].join(BLOCK_SEPARATOR),
        Some(PromptSpec::neutral(Task::FactCheckT3)),
    ))
}

/// First agent turn: instructions, then the claim with metadata.
pub fn render_react_initial(
    templates: &TemplateSet,
    system: &RenderedPrompt,
    claim: &str,
    date: NaiveDate,
    author: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    let blocks = [
        system.text.clone(),
        claim_block(templates, claim, date, author)?,
        templates.get("final").render(&[])?,
    ];
    Ok(RenderedPrompt::new(blocks.join(BLOCK_SEPARATOR), system.spec))
}

/// Second agent turn: the claim, the model's own query and the evidence,
/// followed by the JSON and Final blocks.
pub fn render_react_followup(
    templates: &TemplateSet,
    system: &RenderedPrompt,
    claim: &str,
    date: NaiveDate,
    author: Option<&str>,
    evidence: &Evidence,
) -> Result<RenderedPrompt, PromptError> {
    let blocks = [
        system.text.clone(),
        claim_block(templates, claim, date, author)?,
        evidence_block(templates, evidence)?,
        templates.get("react_followup").render(&[])?,
        templates.get("json").render(&[])?,
        templates.get("final").render(&[])?,
    ];
    Ok(RenderedPrompt::new(blocks.join(BLOCK_SEPARATOR), system.spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{enumerate_specs, ExampleAnswer};
    use crate::retrieval::{EvidenceFormat, EvidenceItem, SourceKind};
    use crate::VerdictLabel;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 4, 5).unwrap()
    }

    fn examples() -> Vec<FewShotExample> {
        vec![
            FewShotExample {
                claim: "Example true claim".into(),
                article_excerpt: "It is accurate.".into(),
                label: VerdictLabel::True,
                gold: ExampleAnswer { score: 100, explanation: "Accurate.".into() },
            },
            FewShotExample {
                claim: "Example false claim".into(),
                article_excerpt: "It is wrong.".into(),
                label: VerdictLabel::False,
                gold: ExampleAnswer { score: 0, explanation: "Wrong.".into() },
            },
        ]
    }

    fn input<'a>(ex: Option<&'a [FewShotExample]>) -> ComposeInput<'a> {
        ComposeInput {
            claim: "The river is purple.",
            date: date(),
            author: Some("A. Person"),
            context: Context::Article("The river is blue, according to officials."),
            examples: ex,
        }
    }

    #[test]
    fn zero_shot_block_order() {
        let t = TemplateSet::default();
        let spec = PromptSpec::neutral(Task::VerdictFromArticleT2);
        let text = compose(&t, &spec, &input(None)).unwrap().text;
        let pos = |name: &str| text.find(t.get(name).text()).unwrap_or_else(|| panic!("{name}"));
        assert_eq!(pos("role"), 0);
        assert!(pos("role") < pos("task_verdict"));
        assert!(pos("task_verdict") < text.find("The river is purple.").unwrap());
        assert!(text.find("The river is blue").unwrap() < pos("json"));
        assert!(pos("json") < pos("final"));
        assert!(text.ends_with(t.get("final").text()));
        assert!(text.contains("Statement author: A. Person"));
        assert!(text.contains("Publication date: 2021-04-05"));
        assert!(!text.contains(t.get("enrich").text()));
    }

    #[test]
    fn cot_suffix_is_terminal() {
        let t = TemplateSet::default();
        let spec = PromptSpec { approach: Approach::ChainOfThought, ..PromptSpec::neutral(Task::RelatednessT1) };
        let text = compose(&t, &spec, &input(None)).unwrap().text;
        assert!(text.ends_with("Let's think step-by-step"));
    }

    #[test]
    fn few_shot_examples_bracketed() {
        let t = TemplateSet::default();
        let ex = examples();
        let spec = PromptSpec { approach: Approach::FewShot, ..PromptSpec::neutral(Task::VerdictFromArticleT2) };
        let text = compose(&t, &spec, &input(Some(&ex))).unwrap().text;
        for e in &ex {
            let at = text.find(&e.claim).unwrap();
            let open = text[..at].rfind('[').unwrap();
            let close = at + text[at..].find("\n]").unwrap();
            assert!(text[open..close].contains(&e.article_excerpt));
        }
        assert_eq!(
            compose(&t, &PromptSpec::neutral(Task::VerdictFromArticleT2), &input(Some(&ex))),
            Err(PromptError::ExamplesMismatch)
        );
        assert_eq!(compose(&t, &spec, &input(None)), Err(PromptError::ExamplesMismatch));
    }

    #[test]
    fn missing_author_line_dropped_and_context_required() {
        let t = TemplateSet::default();
        let spec = PromptSpec::neutral(Task::RelatednessT1);
        let mut inp = input(None);
        inp.author = None;
        let text = compose(&t, &spec, &inp).unwrap().text;
        assert!(!text.contains("Statement author"));
        inp.context = Context::None;
        assert!(matches!(compose(&t, &spec, &inp), Err(PromptError::MissingContext(_))));
    }

    #[test]
    fn enrich_flag_controls_definitions() {
        let t = TemplateSet::default();
        for spec in enumerate_specs(Task::RelatednessT1) {
            let ex = examples();
            let ex = (spec.approach == Approach::FewShot).then_some(ex.as_slice());
            let text = compose(&t, &spec, &input(ex)).unwrap().text;
            let enriched = text.contains("fake quotes") && text.contains("conspiracy theories");
            assert_eq!(enriched, spec.enrich, "{}", spec.key());
        }
    }

    #[test]
    fn summary_spec_labels_context_as_summary() {
        let t = TemplateSet::default();
        let spec = PromptSpec { summary: true, ..PromptSpec::neutral(Task::VerdictFromArticleT2) };
        let text = compose(&t, &spec, &input(None)).unwrap().text;
        assert!(text.contains(t.get("article_summary").text().lines().next().unwrap()));
    }

    #[test]
    fn self_reflection_embeds_previous_exchange() {
        let t = TemplateSet::default();
        let out = render_self_reflection(&t, "PROMPT TEXT", "{\"score\": 10}").unwrap().text;
        assert!(out.contains("PROMPT TEXT"));
        assert!(out.contains("{\"score\": 10}"));
        assert!(out.ends_with(t.get("final").text()));
        assert_eq!(render_self_reflection(&t, "p", "  "), Err(PromptError::EmptyInput("previous answer")));
    }

    #[test]
    fn summary_request_overhead_is_bounded() {
        let t = TemplateSet::default();
        let overhead = render_summary_request(&t, "x", None).unwrap().text.chars().count() - 1;
        let article: String = "a ".repeat(10_000);
        let out = render_summary_request(&t, &article, None).unwrap().text;
        assert!(out.contains(&article));
        assert!(out.chars().count() <= article.chars().count() + overhead);
        let claim = "claim text";
        let focused = render_summary_request(&t, &article, Some(claim)).unwrap().text;
        assert!(focused.contains(claim));
        assert!(render_summary_request(&t, " ", None).is_err());
    }

    #[test]
    fn react_system_prompt_variants() {
        let t = TemplateSet::default();
        let with_tool = render_react_system_prompt(
            &t,
            Some(ToolInfo { name: "wikipedia", description: "searches Wikipedia" }),
        )
        .unwrap()
        .text;
        assert!(with_tool.contains("wikipedia"));
        assert!(with_tool.contains("\"action\"") && with_tool.contains("\"action_input\""));
        assert!(with_tool.contains("\"score\""));
        let bare = render_react_system_prompt(&t, None).unwrap().text;
        assert!(!bare.contains("\"action\""));
        assert!(bare.contains("\"score\""));
        for text in [with_tool, bare] {
            assert!(text.contains("fact-checker"));
        }
    }

    #[test]
    fn react_followup_carries_evidence() {
        let t = TemplateSet::default();
        let system = render_react_system_prompt(&t, None).unwrap();
        let ev = Evidence {
            source: SourceKind::Encyclopedia,
            format: EvidenceFormat::Snippet,
            query: "purple river".into(),
            items: vec![EvidenceItem {
                title: "River".into(),
                url: "https://en.wikipedia.org/wiki/River".into(),
                text: "Rivers are usually not purple.".into(),
                date: None,
            }],
        };
        let out = render_react_followup(&t, &system, "claim", date(), None, &ev).unwrap().text;
        assert!(out.contains("purple river"));
        assert!(out.contains("Rivers are usually not purple."));
        assert!(out.ends_with(t.get("final").text()));
        let empty = Evidence { items: vec![], ..ev };
        let out = render_react_followup(&t, &system, "claim", date(), None, &empty).unwrap().text;
        assert!(out.contains("no results found"));
    }
}
