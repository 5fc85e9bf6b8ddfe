use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;

use serde::Serialize;

use super::config::{RunConfig, UnitConfig};
use super::record::{read_log, RunRecord};
use super::report::{task_report, write_reports};
use super::{Clock, RunError, QUARANTINE_FILE, RECORDS_FILE, SETTINGS_FILE};
use crate::agent::{run_episode, AgentEnv, AgentTool, ClaimInput};
use crate::corpus::{pair_for_task1, ClaimRecord, VerdictLabel};
use crate::eval::TaskReport;
use crate::fetch::Fetcher;
use crate::llm::{Gateway, GenerationParams};
use crate::prompt::{
    compose, render_self_reflection, render_summary_request, select_examples, Approach, ComposeInput, Context,
    PromptSpec, Task, TemplateSet,
};
use crate::retrieval::{EvidenceFormat, SearchProvider, SourceKind};
use crate::seed::digest_hex;
use crate::verdict::{extract, FaultReason, VerdictResponse};

/// External collaborators of a run.
pub struct Services {
    pub gateway: Arc<Gateway>,
    pub templates: TemplateSet,
    pub fetcher: Option<Arc<dyn Fetcher>>,
    pub encyclopedia: Option<Arc<dyn SearchProvider>>,
    pub web: Option<Arc<dyn SearchProvider>>,
    pub clock: Arc<dyn Clock>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub task: Task,
    pub records_usable: usize,
    pub records_skipped: usize,
    pub total_units: usize,
    pub reused: usize,
    pub evaluated: usize,
    pub remaining: usize,
    pub quarantined: usize,
    pub complete: bool,
    #[serde(skip)]
    pub report: Option<TaskReport>,
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    claim: usize,
    article: usize,
    gold: VerdictLabel,
    config: UnitConfig,
}

pub struct Runner {
    pub task: Task,
    pub config: RunConfig,
    pub services: Services,
}

impl Runner {
    pub fn new(task: Task, config: RunConfig, services: Services) -> Self {
        Self { task, config, services }
    }

    fn params(&self) -> GenerationParams {
        self.config.generation.params()
    }

    /// Records the task can use: dated and labeled, with an article for
    /// tasks 1 and 2.
    fn usable(&self, dataset: &[ClaimRecord]) -> Vec<ClaimRecord> {
        dataset
            .iter()
            .filter(|r| r.review_date.is_some() && r.label.is_some())
            .filter(|r| self.task == Task::FactCheckT3 || r.article().is_some())
            .cloned()
            .collect()
    }

    fn config_digest(&self, config: &UnitConfig) -> String {
        let g = &self.config.generation;
        let mut parts = vec![
            self.services.templates.fingerprint(),
            self.task.as_str().to_string(),
            config.key(),
            self.config.seed.to_string(),
            g.model.clone(),
            g.temperature.to_string(),
            g.max_new_tokens.to_string(),
        ];
        match config {
            UnitConfig::Prompt(spec) if spec.approach == Approach::FewShot => {
                parts.push(self.config.excerpt_chars.to_string())
            }
            UnitConfig::Agent(c) if c.source != SourceKind::None => {
                parts.push(self.config.fetch.limits.max_chars.to_string());
                parts.push(self.config.retrieval.drop_undated.to_string());
            }
            _ => {}
        }
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        digest_hex(&refs)
    }

    fn check_services(&self, configs: &[UnitConfig]) -> Result<(), RunError> {
        for c in configs {
            let UnitConfig::Agent(a) = c else { continue };
            let provider = match a.source {
                SourceKind::None => continue,
                SourceKind::Encyclopedia => &self.services.encyclopedia,
                SourceKind::WebSearch => &self.services.web,
            };
            if provider.is_none() {
                return Err(RunError::Config(format!("configuration {} needs a search provider", a.key())));
            }
            if a.format != EvidenceFormat::Snippet && self.services.fetcher.is_none() {
                return Err(RunError::Config(format!("configuration {} needs a page fetcher", a.key())));
            }
        }
        Ok(())
    }

    fn units(&self, work: &[ClaimRecord], configs: &[UnitConfig]) -> Result<Vec<Unit>, RunError> {
        let mut units = Vec::new();
        let pairs: Vec<(usize, usize, VerdictLabel)> = match self.task {
            Task::RelatednessT1 => pair_for_task1(work, self.config.seed)?
                .into_iter()
                .map(|p| (p.claim_index, p.article_index, VerdictLabel::from_bool(p.related)))
                .collect(),
            _ => work
                .iter()
                .enumerate()
                .map(|(i, r)| (i, i, r.label.expect("usable records are labeled")))
                .collect(),
        };
        for (claim, article, gold) in pairs {
            for config in configs {
                units.push(Unit { claim, article, gold, config: *config });
            }
        }
        Ok(units)
    }

    /// Runs every outstanding unit (up to `limit`), then, if nothing is
    /// left, compacts the log and writes reports.
    pub fn run(&self, dataset: &[ClaimRecord]) -> Result<RunSummary, RunError> {
        self.params().validate().map_err(RunError::Fatal)?;
        let configs = self.config.unit_configs(self.task)?;
        self.check_services(&configs)?;
        let work = self.usable(dataset);
        let units = self.units(&work, &configs)?;
        let digests: HashMap<String, String> =
            configs.iter().map(|c| (c.key(), self.config_digest(c))).collect();
        let claim_ids: HashSet<&str> = work.iter().map(|r| r.id.as_str()).collect();

        let out_dir = &self.config.out_dir;
        fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
        save_settings(out_dir, self.task, &self.config)?;
        let log_path = out_dir.join(RECORDS_FILE);
        let scan = read_log(&log_path, |id, cfg| {
            claim_ids.contains(id).then(|| digests.get(cfg).cloned()).flatten()
        })?;
        if !scan.quarantined.is_empty() {
            log::warn!("{} log line(s) quarantined", scan.quarantined.len());
            let qpath = out_dir.join(QUARANTINE_FILE);
            let mut q = OpenOptions::new().create(true).append(true).open(&qpath).map_err(|e| RunError::io(&qpath, e))?;
            for item in &scan.quarantined {
                let line = serde_json::to_string(item).expect("quarantine entries serialize");
                writeln!(q, "{line}").map_err(|e| RunError::io(&qpath, e))?;
            }
        }

        let key_of = |u: &Unit| (work[u.claim].id.clone(), u.config.key());
        let mut completed = scan.completed;
        // Keep only reusable lines, in canonical order, before appending.
        let reused: Vec<RunRecord> = units.iter().filter_map(|u| completed.get(&key_of(u)).cloned()).collect();
        write_log(&log_path, &reused)?;

        let pending: Vec<Unit> = units.iter().filter(|u| !completed.contains_key(&key_of(u))).copied().collect();
        let batch = &pending[..pending.len().min(self.config.limit.unwrap_or(usize::MAX))];
        log::info!(
            "{}: {} units, {} reused, running {}",
            self.task,
            units.len(),
            reused.len(),
            batch.len()
        );

        let fresh = self.execute(&work, batch, &log_path)?;
        let evaluated = fresh.len();
        for r in fresh {
            completed.insert(r.key(), r);
        }

        let remaining = units.len() - units.iter().filter(|u| completed.contains_key(&key_of(u))).count();
        let mut summary = RunSummary {
            task: self.task,
            records_usable: work.len(),
            records_skipped: dataset.len() - work.len(),
            total_units: units.len(),
            reused: reused.len(),
            evaluated,
            remaining,
            quarantined: scan.quarantined.len(),
            complete: remaining == 0,
            report: None,
        };
        if summary.complete {
            let ordered: Vec<RunRecord> = units.iter().map(|u| completed[&key_of(u)].clone()).collect();
            write_log(&log_path, &ordered)?;
            let keys: Vec<String> = configs.iter().map(UnitConfig::key).collect();
            let report = task_report(self.task.as_str(), &ordered, &keys)?;
            write_reports(out_dir, &report)?;
            summary.report = Some(report);
        }
        Ok(summary)
    }

    /// Evaluates `batch` on worker threads; a single writer appends each
    /// finished record to the log. A fatal endpoint error stops new work.
    fn execute(&self, work: &[ClaimRecord], batch: &[Unit], log_path: &Path) -> Result<Vec<RunRecord>, RunError> {
        let file = OpenOptions::new().append(true).open(log_path).map_err(|e| RunError::io(log_path, e))?;
        let mut out = BufWriter::new(file);
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let workers = self.config.workers.clamp(1, batch.len().max(1));
        let (tx, rx) = mpsc::channel::<Result<RunRecord, RunError>>();
        let mut done = Vec::with_capacity(batch.len());
        let mut failure = None;
        thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (next, abort) = (&next, &abort);
                scope.spawn(move || loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(unit) = batch.get(i) else { break };
                    let result = self.evaluate(work, unit);
                    if result.is_err() {
                        abort.store(true, Ordering::SeqCst);
                    }
                    if tx.send(result).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for result in rx {
                match result {
                    Ok(record) => {
                        let line = serde_json::to_string(&record).expect("run records serialize");
                        if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
                            abort.store(true, Ordering::SeqCst);
                            failure.get_or_insert(RunError::io(log_path, e));
                        }
                        done.push(record);
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                    }
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(done),
        }
    }

    fn evaluate(&self, work: &[ClaimRecord], unit: &Unit) -> Result<RunRecord, RunError> {
        let claim = &work[unit.claim];
        let started_at = self.services.clock.now_rfc3339();
        let mut record = RunRecord {
            task: self.task,
            claim_id: claim.id.clone(),
            config: unit.config.key(),
            config_digest: self.config_digest(&unit.config),
            article_id: (self.task == Task::RelatednessT1).then(|| work[unit.article].id.clone()),
            prompt_digest: String::new(),
            responses: Vec::new(),
            verdict: VerdictResponse::fault("", FaultReason::GenerationFailed),
            gold: unit.gold,
            review_date: claim.review_date.expect("usable records are dated"),
            transcript: None,
            started_at,
            finished_at: String::new(),
        };
        match unit.config {
            UnitConfig::Prompt(spec) => self.evaluate_prompt(work, unit, &spec, &mut record)?,
            UnitConfig::Agent(cfg) => {
                let tool = match cfg.source {
                    SourceKind::None => None,
                    SourceKind::Encyclopedia => self.services.encyclopedia.as_deref(),
                    SourceKind::WebSearch => self.services.web.as_deref(),
                }
                .map(|provider| AgentTool {
                    provider,
                    format: cfg.format,
                    drop_undated: self.config.retrieval.drop_undated,
                });
                let params = self.params();
                let env = AgentEnv {
                    gateway: &self.services.gateway,
                    params: &params,
                    templates: &self.services.templates,
                    tool,
                    limits: &self.config.fetch.limits,
                    fetcher: self.services.fetcher.as_deref(),
                };
                let input = ClaimInput {
                    text: &claim.claim_text,
                    date: record.review_date,
                    author: claim.claim_author.as_deref(),
                };
                let transcript = run_episode(&env, &input)?;
                record.prompt_digest = transcript.turns.first().map(|t| t.prompt_digest.clone()).unwrap_or_default();
                record.responses = transcript.turns.iter().map(|t| t.response.clone()).collect();
                record.verdict = transcript.verdict.clone();
                record.transcript = Some(transcript);
            }
        }
        record.finished_at = self.services.clock.now_rfc3339();
        Ok(record)
    }

    fn generate(&self, prompt: &str, responses: &mut Vec<Option<String>>) -> Result<Option<String>, RunError> {
        match self.services.gateway.generate(prompt, &self.params()) {
            Ok(out) => {
                responses.push(Some(out.text.clone()));
                Ok(Some(out.text))
            }
            Err(e) if e.is_fatal() => Err(RunError::Fatal(e)),
            Err(e) => {
                log::warn!("generation failed: {e}");
                responses.push(None);
                Ok(None)
            }
        }
    }

    fn evaluate_prompt(
        &self,
        work: &[ClaimRecord],
        unit: &Unit,
        spec: &PromptSpec,
        record: &mut RunRecord,
    ) -> Result<(), RunError> {
        let templates = &self.services.templates;
        let claim = &work[unit.claim];
        let article = work[unit.article].article().expect("usable records have articles");

        let context = if spec.summary {
            let request = render_summary_request(templates, article, Some(&claim.claim_text))?;
            match self.generate(&request.text, &mut record.responses)? {
                Some(s) if !s.trim().is_empty() => s.trim().to_string(),
                _ => {
                    record.prompt_digest = request.digest();
                    return Ok(());
                }
            }
        } else {
            article.to_string()
        };

        let examples = match spec.approach {
            Approach::FewShot => Some(select_examples(
                self.task,
                work,
                &claim.id,
                self.config.seed,
                self.config.excerpt_chars,
            )?),
            _ => None,
        };
        let input = ComposeInput {
            claim: &claim.claim_text,
            date: record.review_date,
            author: claim.claim_author.as_deref(),
            context: Context::Article(&context),
            examples: examples.as_deref(),
        };
        let main = compose(templates, spec, &input)?;
        record.prompt_digest = main.digest();
        let Some(answer) = self.generate(&main.text, &mut record.responses)? else {
            return Ok(());
        };
        record.verdict = extract(&answer);
        if spec.self_reflection && !answer.trim().is_empty() {
            let reflect = render_self_reflection(templates, &main.text, &answer)?;
            record.verdict = match self.generate(&reflect.text, &mut record.responses)? {
                Some(second) => extract(&second),
                None => VerdictResponse::fault("", FaultReason::GenerationFailed),
            };
        }
        Ok(())
    }
}

fn write_log(path: &Path, records: &[RunRecord]) -> Result<(), RunError> {
    let tmp: PathBuf = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(|e| RunError::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        for r in records {
            let line = serde_json::to_string(r).expect("run records serialize");
            writeln!(w, "{line}").map_err(|e| RunError::io(&tmp, e))?;
        }
        w.flush().map_err(|e| RunError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}

/// Task and configuration of a run, stored so `resume` can continue it.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunSettings {
    pub task: Task,
    pub config: RunConfig,
}

fn save_settings(dir: &Path, task: Task, config: &RunConfig) -> Result<(), RunError> {
    let path = dir.join(SETTINGS_FILE);
    let settings = RunSettings { task, config: config.clone() };
    let text = toml::to_string(&settings).map_err(|e| RunError::Config(e.to_string()))?;
    fs::write(&path, text).map_err(|e| RunError::io(&path, e))
}

pub fn load_settings(dir: &Path) -> Result<RunSettings, RunError> {
    let path = dir.join(SETTINGS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
    toml::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}
