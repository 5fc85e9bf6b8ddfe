//! One-action ReAct episodes for open fact-checking.
//!
//! The model either answers at once with `{"score", "explanation"}` or asks
//! for a single tool call with `{"action", "action_input"}`. After the tool
//! result it must answer; a second action is a protocol violation. An
//! episode makes at most two verdict generations, plus one summarizer call
//! per evidence page in summary format.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::fetch::{FetchLimits, Fetcher};
use crate::llm::{Gateway, GatewayError, GenerationParams, Summarizer};
use crate::prompt::{
    render_react_followup, render_react_initial, render_react_system_prompt, PromptError, TemplateSet, ToolInfo,
};
use crate::retrieval::{
    encyclopedia_search, materialize, web_search, DateWindow, DroppedItem, Evidence, EvidenceFormat,
    MaterializeContext, SearchProvider, SourceKind,
};
use crate::seed::digest_hex;
use crate::verdict::{coerce_score, extract, field, json_objects, FaultReason, VerdictResponse, SCORE_KEY};

pub const ACTION_KEY: &str = "action";
pub const ACTION_INPUT_KEY: &str = "action_input";
/// Verdict generations allowed per episode.
pub const MAX_GENERATIONS: usize = 2;

/// One parsed model turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentStep {
    Action { tool: String, input: String },
    Final(VerdictResponse),
    /// Neither form could be read; carries the extraction fault.
    Invalid(VerdictResponse),
}

fn verdict_from_object(raw: &str, object: &Map<String, Value>) -> VerdictResponse {
    match field(object, SCORE_KEY).and_then(coerce_score) {
        Some(score) => VerdictResponse::from_score(raw, score, crate::verdict::explanation_of(object)),
        None => VerdictResponse::fault(raw, FaultReason::BadSchema),
    }
}

fn is_final_action(name: &str) -> bool {
    matches!(
        name.trim().to_ascii_lowercase().replace('_', " ").as_str(),
        "final answer" | "final"
    )
}

/// Reads the last Action or Final-answer object in `raw`. An action named
/// "Final Answer" is accepted as a final answer carrying the score in its
/// input.
pub fn parse_step(raw: &str) -> AgentStep {
    for found in json_objects(raw).iter().rev() {
        let obj = &found.object;
        if let Some(action) = field(obj, ACTION_KEY) {
            let name = match action {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let input = field(obj, ACTION_INPUT_KEY);
            if is_final_action(&name) {
                return AgentStep::Final(match input {
                    Some(Value::Object(inner)) => verdict_from_object(raw, inner),
                    Some(Value::String(s)) => VerdictResponse { raw_text: raw.to_string(), ..extract(s) },
                    _ => VerdictResponse::fault(raw, FaultReason::BadSchema),
                });
            }
            let input = match input {
                Some(Value::String(s)) => s.trim().to_string(),
                Some(Value::Null) | None => String::new(),
                Some(other) => other.to_string(),
            };
            return AgentStep::Action { tool: name, input };
        }
        if field(obj, SCORE_KEY).is_some() {
            return AgentStep::Final(verdict_from_object(raw, obj));
        }
    }
    AgentStep::Invalid(extract(raw))
}

/// The search tool offered to the model.
#[derive(Clone, Copy)]
pub struct AgentTool<'a> {
    pub provider: &'a dyn SearchProvider,
    pub format: EvidenceFormat,
    /// Drop web results that carry no date.
    pub drop_undated: bool,
}

impl AgentTool<'_> {
    pub fn info(&self) -> ToolInfo<'static> {
        match self.provider.kind() {
            SourceKind::Encyclopedia => ToolInfo {
                name: "wikipedia",
                description: "searches English Wikipedia and returns the 3 most relevant articles",
            },
            _ => ToolInfo {
                name: "web_search",
                description: "searches the web for pages published before the statement was fact-checked and returns the 3 most relevant results",
            },
        }
    }
}

pub struct AgentEnv<'a> {
    pub gateway: &'a Gateway,
    pub params: &'a GenerationParams,
    pub templates: &'a TemplateSet,
    pub tool: Option<AgentTool<'a>>,
    pub limits: &'a FetchLimits,
    pub fetcher: Option<&'a dyn Fetcher>,
}

/// The claim as the agent sees it.
#[derive(Debug, Clone, Copy)]
pub struct ClaimInput<'a> {
    pub text: &'a str,
    pub date: NaiveDate,
    pub author: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub prompt_digest: String,
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCall {
    pub tool: String,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTranscript {
    pub turns: Vec<Turn>,
    pub action: Option<ActionCall>,
    pub evidence: Option<Evidence>,
    pub dropped: Vec<DroppedItem>,
    pub tool_error: Option<String>,
    pub summarizer_calls: usize,
    pub verdict: VerdictResponse,
}

impl EpisodeTranscript {
    pub fn generate_calls(&self) -> usize {
        self.turns.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    /// A gateway failure that will recur on every request.
    #[error(transparent)]
    Fatal(GatewayError),
}

enum Generated {
    Text(String),
    Failed,
}

fn generate(env: &AgentEnv<'_>, prompt: &str, turns: &mut Vec<Turn>) -> Result<Generated, AgentError> {
    let digest = digest_hex(&[prompt]);
    match env.gateway.generate(prompt, env.params) {
        Ok(out) => {
            turns.push(Turn { prompt_digest: digest, response: Some(out.text.clone()) });
            Ok(Generated::Text(out.text))
        }
        Err(e) if e.is_fatal() => Err(AgentError::Fatal(e)),
        Err(e) => {
            log::warn!("agent generation failed: {e}");
            turns.push(Turn { prompt_digest: digest, response: None });
            Ok(Generated::Failed)
        }
    }
}

pub fn run_episode(env: &AgentEnv<'_>, claim: &ClaimInput<'_>) -> Result<EpisodeTranscript, AgentError> {
    let system = render_react_system_prompt(env.templates, env.tool.map(|t| t.info()))?;
    let first = render_react_initial(env.templates, &system, claim.text, claim.date, claim.author)?;
    let mut t = EpisodeTranscript {
        turns: Vec::new(),
        action: None,
        evidence: None,
        dropped: Vec::new(),
        tool_error: None,
        summarizer_calls: 0,
        verdict: VerdictResponse::fault("", FaultReason::GenerationFailed),
    };

    let raw = match generate(env, &first.text, &mut t.turns)? {
        Generated::Text(raw) => raw,
        Generated::Failed => return Ok(t),
    };
    let (tool_name, query) = match parse_step(&raw) {
        AgentStep::Final(v) | AgentStep::Invalid(v) => {
            t.verdict = v;
            return Ok(t);
        }
        AgentStep::Action { tool, input } => (tool, input),
    };
    t.action = Some(ActionCall { tool: tool_name, query: query.clone() });
    let Some(tool) = env.tool else {
        t.verdict = VerdictResponse::fault(raw, FaultReason::ProtocolViolation);
        return Ok(t);
    };

    let evidence = run_tool(env, &tool, claim, &query, &mut t);
    let followup = render_react_followup(env.templates, &system, claim.text, claim.date, claim.author, &evidence)?;
    t.evidence = Some(evidence);
    let raw = match generate(env, &followup.text, &mut t.turns)? {
        Generated::Text(raw) => raw,
        Generated::Failed => return Ok(t),
    };
    t.verdict = match parse_step(&raw) {
        AgentStep::Final(v) | AgentStep::Invalid(v) => v,
        AgentStep::Action { .. } => VerdictResponse::fault(raw, FaultReason::ProtocolViolation),
    };
    Ok(t)
}

/// Runs the single tool call. Failures yield empty evidence, so the model
/// is told no results were found.
fn run_tool(
    env: &AgentEnv<'_>,
    tool: &AgentTool<'_>,
    claim: &ClaimInput<'_>,
    query: &str,
    t: &mut EpisodeTranscript,
) -> Evidence {
    let source = tool.provider.kind();
    let empty = Evidence::empty(source, tool.format, query);
    let hits = match source {
        SourceKind::Encyclopedia => encyclopedia_search(tool.provider, query),
        _ => web_search(tool.provider, query, &DateWindow::before_review(claim.date), tool.drop_undated)
            .map(|o| o.results),
    };
    let hits = match hits {
        Ok(h) => h,
        Err(e) => {
            t.tool_error = Some(e.to_string());
            return empty;
        }
    };
    let summarizer = Summarizer { gateway: env.gateway, templates: env.templates, params: env.params };
    let ctx = MaterializeContext {
        limits: env.limits,
        fetcher: env.fetcher,
        summarizer: Some(&summarizer),
        focus: Some(claim.text),
    };
    match materialize(source, tool.format, query, &hits, &ctx) {
        Ok(m) => {
            t.dropped = m.dropped;
            t.summarizer_calls = m.summarizer_calls;
            m.evidence
        }
        Err(e) => {
            t.tool_error = Some(e.to_string());
            empty
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::RetryPolicy;
    use crate::retrieval::{FixtureSearch, SearchResult};
    use crate::testkit::ScriptedModel;
    use crate::VerdictLabel;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    #[test]
    fn parse_step_forms() {
        assert_eq!(
            parse_step(r#"Thought: check. {"action": "wikipedia", "action_input": "Eiffel Tower height"}"#),
            AgentStep::Action { tool: "wikipedia".into(), input: "Eiffel Tower height".into() }
        );
        match parse_step(r#"{"score": 80, "explanation": "ok"}"#) {
            AgentStep::Final(v) => assert_eq!(v.label, Some(VerdictLabel::True)),
            other => panic!("{other:?}"),
        }
        match parse_step(r#"{"action": "Final Answer", "action_input": {"score": 10, "explanation": "no"}}"#) {
            AgentStep::Final(v) => assert_eq!(v.score, Some(10)),
            other => panic!("{other:?}"),
        }
        match parse_step("{'action': 'web_search', 'action_input': 'x'}") {
            AgentStep::Action { tool, .. } => assert_eq!(tool, "web_search"),
            other => panic!("{other:?}"),
        }
        match parse_step("no json here") {
            AgentStep::Invalid(v) => assert_eq!(v.fault_reason, Some(FaultReason::NoJson)),
            other => panic!("{other:?}"),
        }
    }

    fn provider() -> FixtureSearch {
        let mut m = BTreeMap::new();
        m.insert(
            "*".to_string(),
            vec![SearchResult { title: "T".into(), url: "https://e.example".into(), snippet: "evidence".into(), date: None }],
        );
        FixtureSearch::new(SourceKind::Encyclopedia, m)
    }

    fn run(script: Vec<&str>, with_tool: bool) -> (EpisodeTranscript, usize) {
        let model = Arc::new(ScriptedModel::sequence(script.into_iter().map(|s| Ok(s.to_string())).collect()));
        let gateway = Gateway::new(model.clone(), RetryPolicy::immediate(1), 1);
        let params = GenerationParams::default();
        let templates = TemplateSet::default();
        let limits = FetchLimits::default();
        let p = provider();
        let env = AgentEnv {
            gateway: &gateway,
            params: &params,
            templates: &templates,
            tool: with_tool.then_some(AgentTool { provider: &p, format: EvidenceFormat::Snippet, drop_undated: false }),
            limits: &limits,
            fetcher: None,
        };
        let claim = ClaimInput { text: "The tower is 1 km tall.", date: "2020-02-02".parse().unwrap(), author: None };
        (run_episode(&env, &claim).unwrap(), model.calls())
    }

    #[test]
    fn direct_answer_uses_one_call() {
        let (t, calls) = run(vec![r#"{"score": 20, "explanation": "x"}"#], true);
        assert_eq!((t.generate_calls(), calls), (1, 1));
        assert_eq!(t.verdict.label, Some(VerdictLabel::False));
    }

    #[test]
    fn action_then_answer_uses_two_calls() {
        let (t, calls) = run(
            vec![r#"{"action": "wikipedia", "action_input": "tower"}"#, r#"{"score": 5, "explanation": "x"}"#],
            true,
        );
        assert_eq!((t.generate_calls(), calls), (2, 2));
        assert_eq!(t.evidence.unwrap().items.len(), 1);
        assert_eq!(t.verdict.score, Some(5));
    }

    #[test]
    fn second_action_is_violation_and_stops() {
        let (t, calls) = run(
            vec![
                r#"{"action": "wikipedia", "action_input": "a"}"#,
                r#"{"action": "wikipedia", "action_input": "b"}"#,
                r#"{"score": 90}"#,
            ],
            true,
        );
        assert_eq!(calls, 2);
        assert_eq!(t.verdict.fault_reason, Some(FaultReason::ProtocolViolation));
    }

    #[test]
    fn action_without_tool_is_violation() {
        let (t, calls) = run(vec![r#"{"action": "wikipedia", "action_input": "a"}"#, r#"{"score": 90}"#], false);
        assert_eq!(calls, 1);
        assert_eq!(t.verdict.fault_reason, Some(FaultReason::ProtocolViolation));
    }

    #[test]
    fn empty_query_still_gets_followup() {
        let (t, calls) = run(vec![r#"{"action": "wikipedia", "action_input": ""}"#, r#"{"score": 60}"#], true);
        assert_eq!(calls, 2);
        assert!(t.tool_error.is_some());
        assert_eq!(t.verdict.label, Some(VerdictLabel::True));
    }
}
