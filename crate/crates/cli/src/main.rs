use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use factcheck::corpus::{load_dataset, write_dataset, SamplingPlan, VerdictMap};
use factcheck::eval::{render_table, write_per_config_csv, TaskReport};
use factcheck::fetch::{Fetcher, HttpFetcher, HttpFetcherConfig};
use factcheck::llm::{connect, Gateway, ENV_ENDPOINT, ENV_MODEL};
use factcheck::prompt::{Task, TemplateSet};
use factcheck::retrieval::{EvidenceFormat, FixtureSearch, SearchProvider, SerperSearch, SourceKind, WikipediaSearch};
use factcheck::runner::{
    baseline_report, fetch_articles, load_settings, prepare_sample, read_baseline, read_records, task_report,
    RunConfig, RunSummary, Runner, Services, SystemClock, RECORDS_FILE,
};

/// Fact-checking evaluation harness.
#[derive(Parser)]
#[command(name = "harness", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model id sent to the endpoint.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Generation endpoint base URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// sample: feed file. task3: comma-separated tools (none, wiki, web).
    /// report: baseline predictions file.
    #[arg(long, global = true)]
    source: Option<String>,
    /// task3: comma-separated evidence formats (snippet, full, summary).
    /// report: output format (table, json, csv).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Comma-separated configuration keys, e.g. `zs,cot+enrich` or `wiki+full`.
    #[arg(long, global = true)]
    specs: Option<String>,
    /// sample: dataset file to write. Other commands: run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset (JSON lines) to evaluate.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Stop after this many new evaluations.
    #[arg(long, global = true)]
    limit: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Build a labeled, stratified sample from a fact-check feed.
    Sample {
        /// Extra verdict mapping table (verdict<TAB>True|False).
        #[arg(long)]
        verdict_map: Option<PathBuf>,
        /// Do not download fact-check articles.
        #[arg(long)]
        no_fetch: bool,
        /// Reference date for dropping future-dated reviews (default: today).
        #[arg(long)]
        today: Option<NaiveDate>,
    },
    /// Claim/article relatedness.
    Task1,
    /// Verdict from the fact-check article.
    Task2,
    /// Fact-checking with optional retrieved evidence.
    Task3,
    /// Print the report of a run directory or of baseline predictions.
    Report,
    /// Continue an interrupted run.
    Resume,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Sample { verdict_map, no_fetch, today } => sample(&cli.opts, verdict_map, no_fetch, today),
        Command::Task1 => run_task(&cli.opts, Task::RelatednessT1),
        Command::Task2 => run_task(&cli.opts, Task::VerdictFromArticleT2),
        Command::Task3 => run_task(&cli.opts, Task::FactCheckT3),
        Command::Report => report(&cli.opts),
        Command::Resume => resume(&cli.opts),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn base_config(opts: &Opts) -> Result<RunConfig> {
    match &opts.config {
        Some(path) => Ok(RunConfig::load(path)?),
        None => Ok(RunConfig::default()),
    }
}

/// Applies flags shared by every evaluation command.
fn apply_overrides(config: &mut RunConfig, opts: &Opts) {
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(model) = &opts.model {
        config.generation.model = model.clone();
    }
    if let Some(endpoint) = &opts.endpoint {
        config.generation.endpoint = endpoint.clone();
    }
    if let Some(dataset) = &opts.dataset {
        config.dataset = dataset.clone();
    }
    if let Some(out) = &opts.out {
        config.out_dir = out.clone();
    }
    if let Some(workers) = opts.workers {
        config.workers = workers;
    }
    if let Some(specs) = &opts.specs {
        config.specs = split_list(specs);
    }
    config.limit = opts.limit;
    if config.generation.endpoint.is_empty() {
        config.generation.endpoint = std::env::var(ENV_ENDPOINT).unwrap_or_default();
    }
    if config.generation.model.is_empty() {
        config.generation.model = std::env::var(ENV_MODEL).unwrap_or_default();
    }
}

/// Task 3 configuration keys from `--source` and `--format`.
fn task3_keys(source: Option<&str>, format: Option<&str>) -> Result<Option<Vec<String>>> {
    if source.is_none() && format.is_none() {
        return Ok(None);
    }
    let sources = source.map_or_else(|| vec!["wiki".into(), "web".into()], split_list);
    let formats: Vec<EvidenceFormat> = match format {
        Some(f) => split_list(f).iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        None => vec![EvidenceFormat::Snippet, EvidenceFormat::FullArticle, EvidenceFormat::Summary],
    };
    let mut keys = Vec::new();
    for s in sources {
        let kind = match s.to_ascii_lowercase().as_str() {
            "none" => {
                if format.is_some() && keys.is_empty() && source.is_some_and(|v| split_list(v).len() == 1) {
                    bail!("--source none takes no --format");
                }
                keys.push("none".to_string());
                continue;
            }
            "wiki" | "wikipedia" | "encyclopedia" => SourceKind::Encyclopedia,
            "web" | "websearch" | "google" => SourceKind::WebSearch,
            other => bail!("unknown source {other:?} (expected none, wiki or web)"),
        };
        for f in &formats {
            keys.push(format!("{}+{}", kind.code(), f.code()));
        }
    }
    Ok(Some(keys))
}

fn provider(spec: &str, kind: SourceKind, config: &RunConfig) -> Result<Option<Arc<dyn SearchProvider>>> {
    let timeout = Duration::from_secs_f64(config.retrieval.timeout_secs.max(0.001));
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("fixture:") {
        return Ok(Some(Arc::new(FixtureSearch::load(kind, Path::new(path))?)));
    }
    Ok(match (spec, kind) {
        ("none" | "", _) => None,
        ("wikipedia", SourceKind::Encyclopedia) => Some(Arc::new(WikipediaSearch::new(None, timeout)?)),
        ("serper", SourceKind::WebSearch) => match std::env::var(&config.retrieval.web_api_key_env) {
            Ok(key) if !key.is_empty() => Some(Arc::new(SerperSearch::new(
                config.retrieval.web_endpoint.as_deref(),
                key,
                timeout,
            )?)),
            _ => {
                log::warn!("{} is not set; web search unavailable", config.retrieval.web_api_key_env);
                None
            }
        },
        (other, _) => bail!("unknown search provider {other:?}"),
    })
}

fn build_fetcher(config: &RunConfig) -> Result<Arc<dyn Fetcher>> {
    Ok(Arc::new(HttpFetcher::new(HttpFetcherConfig {
        per_host_delay: Duration::from_millis(config.fetch.per_host_delay_ms),
        max_in_flight: config.fetch.max_in_flight,
        max_redirects: config.fetch.limits.max_redirects,
        ..Default::default()
    })?))
}

fn build_services(config: &RunConfig, task: Task) -> Result<Services> {
    let g = &config.generation;
    if g.endpoint.is_empty() {
        bail!("no generation endpoint: pass --endpoint, set generation.endpoint or {ENV_ENDPOINT}");
    }
    let api_key = std::env::var(&g.api_key_env).ok().filter(|k| !k.is_empty());
    let backend = connect(g.backend, &g.endpoint, api_key, g.timeout())?;
    let mut gateway = Gateway::new(backend, g.retry(), g.max_in_flight);
    if let Some(log_path) = &g.request_log {
        gateway = gateway.with_log(log_path).with_context(|| format!("opening {}", log_path.display()))?;
    }
    let templates = match &config.templates_dir {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::default(),
    };
    let (encyclopedia, web) = if task == Task::FactCheckT3 {
        (
            provider(&config.retrieval.encyclopedia, SourceKind::Encyclopedia, config)?,
            provider(&config.retrieval.web, SourceKind::WebSearch, config)?,
        )
    } else {
        (None, None)
    };
    Ok(Services {
        gateway: Arc::new(gateway),
        templates,
        fetcher: Some(build_fetcher(config)?),
        encyclopedia,
        web,
        clock: Arc::new(SystemClock),
    })
}

fn execute(task: Task, config: RunConfig) -> Result<()> {
    let dataset = load_dataset(&config.dataset)
        .with_context(|| format!("loading dataset {}", config.dataset.display()))?;
    let out_dir = config.out_dir.clone();
    let services = build_services(&config, task)?;
    let summary = Runner::new(task, config, services).run(&dataset)?;
    print_summary(&summary, &out_dir);
    Ok(())
}

fn print_summary(summary: &RunSummary, out_dir: &Path) {
    eprintln!(
        "{}: {} units ({} reused, {} evaluated, {} remaining, {} quarantined, {} records skipped)",
        summary.task,
        summary.total_units,
        summary.reused,
        summary.evaluated,
        summary.remaining,
        summary.quarantined,
        summary.records_skipped
    );
    match &summary.report {
        Some(report) => print!("{}", render_table(report)),
        None => eprintln!("run incomplete; continue with `harness resume --out {}`", out_dir.display()),
    }
}

fn run_task(opts: &Opts, task: Task) -> Result<()> {
    let mut config = base_config(opts)?;
    apply_overrides(&mut config, opts);
    if task == Task::FactCheckT3 {
        if let Some(keys) = task3_keys(opts.source.as_deref(), opts.format.as_deref())? {
            config.specs = keys;
        }
    } else if opts.source.is_some() || opts.format.is_some() {
        bail!("--source and --format apply to task3 only");
    }
    execute(task, config)
}

fn resume(opts: &Opts) -> Result<()> {
    let Some(dir) = &opts.out else { bail!("resume needs --out <run directory>") };
    let settings = load_settings(dir)?;
    let mut config = settings.config;
    config.out_dir = dir.clone();
    if let Some(model) = &opts.model {
        config.generation.model = model.clone();
    }
    if let Some(endpoint) = &opts.endpoint {
        config.generation.endpoint = endpoint.clone();
    }
    if let Some(workers) = opts.workers {
        config.workers = workers;
    }
    config.limit = opts.limit;
    execute(settings.task, config)
}

fn emit(report: &TaskReport, format: Option<&str>) -> Result<()> {
    match format.unwrap_or("table") {
        "table" => print!("{}", render_table(report)),
        "json" => println!("{}", serde_json::to_string_pretty(report)?),
        "csv" => write_per_config_csv(report, std::io::stdout())?,
        other => bail!("unknown report format {other:?} (expected table, json or csv)"),
    }
    Ok(())
}

fn report(opts: &Opts) -> Result<()> {
    if let Some(predictions) = &opts.source {
        let Some(dataset) = &opts.dataset else { bail!("baseline reports need --dataset") };
        let dataset = load_dataset(dataset)?;
        let scan = read_baseline(Path::new(predictions))?;
        if !scan.bad_lines.is_empty() {
            log::warn!("{} unreadable prediction line(s): {:?}", scan.bad_lines.len(), scan.bad_lines);
        }
        let report = baseline_report(&dataset, &scan)?;
        if let Some(dir) = &opts.out {
            factcheck::runner::write_reports(dir, &report)?;
        }
        return emit(&report, opts.format.as_deref());
    }
    let Some(dir) = &opts.out else { bail!("report needs --out <run directory> or --source <predictions>") };
    let records = read_records(&dir.join(RECORDS_FILE))?;
    let task = load_settings(dir).map(|s| s.task.to_string()).unwrap_or_else(|_| "unknown".into());
    let report = task_report(&task, &records, &[])?;
    emit(&report, opts.format.as_deref())
}

fn sample(opts: &Opts, verdict_map: Option<PathBuf>, no_fetch: bool, today: Option<NaiveDate>) -> Result<()> {
    let Some(feed) = &opts.source else { bail!("sample needs --source <feed file>") };
    let mut config = base_config(opts)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let out = opts.out.clone().unwrap_or_else(|| config.dataset.clone());
    let mut map = VerdictMap::shipped();
    if let Some(path) = verdict_map {
        map.extend(VerdictMap::from_file(&path)?);
    }
    let today = today.unwrap_or_else(|| chrono::Local::now().date_naive());
    let (mut records, mut report) =
        prepare_sample(Path::new(feed), &map, &SamplingPlan::standard(config.seed), today)?;
    if !no_fetch {
        let fetcher = build_fetcher(&config)?;
        report.articles = Some(fetch_articles(&mut records, fetcher.as_ref(), &config.fetch.limits, config.workers));
    }
    write_dataset(&out, &records)?;
    let report_path = out.with_extension("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", report_path.display()))?;
    eprintln!(
        "{} feed entries, {} sampled into {} ({} shortfall cells); details in {}",
        report.ingested,
        report.sampled,
        out.display(),
        report.shortfalls.len(),
        report_path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task3_key_expansion() {
        assert_eq!(task3_keys(None, None).unwrap(), None);
        assert_eq!(task3_keys(Some("none"), None).unwrap().unwrap(), ["none"]);
        assert_eq!(
            task3_keys(Some("wiki"), Some("snippet,summary")).unwrap().unwrap(),
            ["wiki+snippet", "wiki+summary"]
        );
        assert_eq!(task3_keys(None, Some("full")).unwrap().unwrap(), ["wiki+full", "web+full"]);
        assert!(task3_keys(Some("none"), Some("full")).is_err());
        assert!(task3_keys(Some("bing"), None).is_err());
    }

    #[test]
    fn cli_parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["harness", "task2", "--specs", "zs,fs", "--seed", "3", "--out", "r"]).unwrap();
        assert!(matches!(cli.command, Command::Task2));
        assert_eq!(cli.opts.seed, Some(3));
        let mut config = RunConfig::default();
        apply_overrides(&mut config, &cli.opts);
        assert_eq!(config.specs, ["zs", "fs"]);
        assert_eq!(config.out_dir, PathBuf::from("r"));
    }
}
