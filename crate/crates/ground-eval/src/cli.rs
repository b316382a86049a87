//! Command-line interface.
//!
//! Exit codes: 0 success, 1 validation errors (bad corpus, config, manifest
//! or unextractable input), 2 runtime failures (IO, backend).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ground_eval_core::corpus::{grounding_instances, CorpusStats};
use ground_eval_core::eval_knowledge::Denominator;
use ground_eval_core::extract::{extract, ExtractKind, ExtractOptions, Extracted};
use ground_eval_core::prompts::{build_prompt, template_messages, transcript, PromptMode, Shot, Window, WindowReading};
use ground_eval_core::Task;
use serde::Serialize;

use crate::config::{BackendKind, FileConfig, RunConfig};
use crate::corpus_io::{self, LoadError};
use crate::evaluate::{evaluate, write_reports, EvaluateOptions, RunReport};
use crate::gateway::HttpOptions;
use crate::manifest::{self, RunManifest};
use crate::report::{self, Format};
use crate::runner::{self, RunError};

#[derive(Debug, Parser)]
#[command(name = "ground-eval", version, about = "Evaluate grounding-act classification and grounded-knowledge identification")]
pub struct Cli {
    /// JSON file supplying defaults for run options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check corpus invariants and report warnings.
    Validate {
        corpus: PathBuf,
        /// Treat warnings as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Count conversations, turns, labels and task instances.
    Stats {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Query a backend for every instance of a task and write a manifest.
    Run(RunArgs),
    /// Score a manifest and write report files.
    Evaluate(EvaluateArgs),
    /// Render one or more `.report.json` files, side by side when several.
    Report {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
    /// Inspect prompts.
    Prompts {
        #[command(subcommand)]
        command: PromptsCommand,
    },
    /// Extract an act label or JSON-LD array from text on stdin.
    Extract {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Try later `[` candidates when the first never balances.
        #[arg(long)]
        retry_later_candidates: bool,
    },
    /// Write a scripted-backend file answering every instance with its gold.
    GoldScript {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum PromptsCommand {
    /// Print the fixed template, or the full prompt for one turn.
    Show {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "zero")]
        shot: ShotArg,
        #[arg(long)]
        n: Option<Window>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, requires = "turn", requires = "corpus")]
        conversation: Option<String>,
        #[arg(long, requires = "conversation")]
        turn: Option<usize>,
        #[arg(long, value_enum)]
        window_reading: Option<ReadingArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Acts,
    Knowledge,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Acts => Task::Acts,
            TaskArg::Knowledge => Task::Knowledge,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShotArg {
    Zero,
    Few,
}

impl From<ShotArg> for Shot {
    fn from(s: ShotArg) -> Shot {
        match s {
            ShotArg::Zero => Shot::Zero,
            ShotArg::Few => Shot::Few,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Act,
    Graph,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReadingArg {
    PrecedingPlusTarget,
    TargetInclusive,
}

impl From<ReadingArg> for WindowReading {
    fn from(r: ReadingArg) -> WindowReading {
        match r {
            ReadingArg::PrecedingPlusTarget => WindowReading::PrecedingPlusTarget,
            ReadingArg::TargetInclusive => WindowReading::TargetInclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DenominatorArg {
    All,
    ExcludeInvalid,
}

/// Options shared by `run` and `gold-script`.
#[derive(Debug, Args)]
pub struct TargetArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum)]
    pub shot: ShotArg,
    /// Act-task window: a positive count of preceding utterances or `all`.
    #[arg(long)]
    pub n: Option<Window>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub window_reading: Option<ReadingArg>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Response cache (JSONL); required for replay.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output directory for the manifest.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Chat-completions URL for the http backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Script file for the scripted backend.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub manifest: PathBuf,
    /// Corpus to score against; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory for report files; defaults to the manifest's directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub denominator: DenominatorArg,
    #[arg(long)]
    pub retry_later_candidates: bool,
    /// Score a manifest left behind by an aborted run.
    #[arg(long)]
    pub allow_partial: bool,
    /// Format of the report echoed to stdout.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

/// Outcome of a command that did not succeed.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn load_failure(e: LoadError) -> Failure {
    match e {
        LoadError::Io { .. } | LoadError::Empty { .. } => runtime(e),
        LoadError::Format { .. } | LoadError::Invariant { .. } => validation(e),
    }
}

type Outcome = Result<(), Failure>;

/// Runs `cli`, returning the process exit code. Diagnostics go to `stderr`.
pub fn execute(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    match dispatch(cli, stdin, stdout, stderr) {
        Ok(()) => 0,
        Err(failure) => {
            let (Failure::Validation(e) | Failure::Runtime(e)) = &failure;
            let _ = writeln!(stderr, "error: {e:#}");
            failure.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let file = match &cli.config {
        Some(path) => FileConfig::read(path).map_err(validation)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Validate { corpus, strict } => validate(&corpus, strict, stdout),
        Command::Stats { corpus, format } => stats(&corpus, format, stdout),
        Command::Run(args) => run(&file, args, stdout, stderr),
        Command::Evaluate(args) => evaluate_cmd(args, stdout),
        Command::Report { format, reports } => report_cmd(format, &reports, stdout),
        Command::Prompts { command: PromptsCommand::Show { task, shot, n, corpus, conversation, turn, window_reading } } => {
            let reading = window_reading.map(Into::into).or(file.window_reading).unwrap_or_default();
            prompts_show(task.into(), shot.into(), n, corpus.or(file.corpus), conversation.zip(turn), reading, stdout)
        }
        Command::Extract { kind, retry_later_candidates } => {
            extract_cmd(kind, ExtractOptions { retry_later_candidates }, stdin, stdout)
        }
        Command::GoldScript { target, out } => gold_script_cmd(&file, &target, &out, stdout),
    }
}

fn out_line(stdout: &mut dyn Write, text: &str) -> Outcome {
    stdout.write_all(text.as_bytes()).map_err(runtime)
}

fn validate(path: &Path, strict: bool, stdout: &mut dyn Write) -> Outcome {
    let loaded = corpus_io::read_corpus(path).map_err(load_failure)?;
    let report = loaded.validate();
    let mut text = String::new();
    for e in &report.errors {
        let file = loaded.source(&e.conversation).unwrap_or(path);
        text.push_str(&format!("error: {}: {e}\n", file.display()));
    }
    for w in &report.warnings {
        let file = loaded.source(&w.conversation).unwrap_or(path);
        text.push_str(&format!("warning[{}]: {}: {w}\n", w.code(), file.display()));
    }
    text.push_str(&format!(
        "{} conversations, {} errors, {} warnings\n",
        loaded.corpus.len(),
        report.errors.len(),
        report.warnings.len()
    ));
    out_line(stdout, &text)?;
    if !report.errors.is_empty() {
        return Err(validation(anyhow::anyhow!("corpus has {} invariant violations", report.errors.len())));
    }
    if strict && !report.warnings.is_empty() {
        return Err(validation(anyhow::anyhow!("corpus has {} warnings (--strict)", report.warnings.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsOutput {
    #[serde(flatten)]
    stats: CorpusStats,
    act_instances: usize,
    knowledge_instances: usize,
}

fn stats(path: &Path, format: Format, stdout: &mut dyn Write) -> Outcome {
    let corpus = corpus_io::load_corpus(path).map_err(load_failure)?;
    let out = StatsOutput {
        stats: CorpusStats::of(&corpus),
        act_instances: grounding_instances(&corpus, Task::Acts).len(),
        knowledge_instances: grounding_instances(&corpus, Task::Knowledge).len(),
    };
    let s = &out.stats;
    let rows = [
        ("conversations", s.conversations),
        ("turns", s.turns),
        ("act_labels", s.act_labels.total),
        ("explicit", s.act_labels.explicit),
        ("implicit", s.act_labels.implicit),
        ("clarification", s.act_labels.clarification),
        ("grounded_annotations", s.grounded_annotations),
        ("act_instances", out.act_instances),
        ("knowledge_instances", out.knowledge_instances),
    ];
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&out).map_err(runtime)? + "\n",
        Format::Csv => {
            let mut t = String::from("statistic,count\n");
            for (k, v) in rows {
                t.push_str(&format!("{k},{v}\n"));
            }
            t
        }
        Format::Text => rows.iter().map(|(k, v)| format!("{k:<21} {v}\n")).collect(),
    };
    out_line(stdout, &text)
}

fn run_config(file: &FileConfig, target: &TargetArgs, backend: BackendKind) -> Result<RunConfig, Failure> {
    let task: Task = target.task.into();
    let corpus = target
        .corpus
        .clone()
        .or_else(|| file.corpus.clone())
        .ok_or_else(|| validation(anyhow::anyhow!("no corpus given (--corpus or config file)")))?;
    let model = target
        .model
        .clone()
        .or_else(|| file.model.clone())
        .ok_or_else(|| validation(anyhow::anyhow!("no model given (--model or config file)")))?;
    let mut cfg = RunConfig::new(corpus, task, target.shot.into(), model, backend);
    if task == Task::Acts {
        cfg.window = Some(target.n.ok_or_else(|| validation(anyhow::anyhow!("the acts task needs --n 1|3|all")))?);
    } else if target.n.is_some() {
        return Err(validation(anyhow::anyhow!("--n only applies to the acts task")));
    }
    if let Some(r) = target.window_reading.map(Into::into).or(file.window_reading) {
        cfg.window_reading = r;
    }
    Ok(cfg)
}

fn run(file: &FileConfig, args: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    let backend = args
        .backend
        .or(file.backend)
        .ok_or_else(|| validation(anyhow::anyhow!("no backend given (--backend or config file)")))?;
    let mut cfg = run_config(file, &args.target, backend)?;
    cfg.endpoint = args.endpoint.or_else(|| file.endpoint.clone());
    cfg.script = args.script.or_else(|| file.script.clone());
    cfg.cache = args.cache.or_else(|| file.cache.clone());
    if let Some(dir) = args.out.or_else(|| file.output_dir.clone()) {
        cfg.output_dir = dir;
    }
    if let Some(p) = args.parallelism.or(file.parallelism) {
        cfg.parallelism = p;
    }
    cfg.validate().map_err(validation)?;

    let corpus = corpus_io::load_corpus(&cfg.corpus).map_err(load_failure)?;
    let mut http = HttpOptions::default();
    if let Some(secs) = file.timeout_secs {
        http.timeout = Duration::from_secs(secs);
    }
    if let Some(n) = file.max_attempts {
        http.max_attempts = n;
    }
    let gateway = runner::build_gateway(&cfg, http).map_err(|e| match e {
        RunError::Config(_) => validation(e),
        _ => runtime(e),
    })?;
    let path = cfg.manifest_path();
    fs::create_dir_all(&cfg.output_dir).with_context(|| cfg.output_dir.display().to_string()).map_err(runtime)?;
    match runner::run_batch(&cfg, &corpus, &gateway) {
        Ok(m) => {
            m.write(&path).map_err(runtime)?;
            let sc = &m.header.sidecar;
            let _ = writeln!(
                stderr,
                "{} instances, {} backend calls, {} cache hits",
                m.records.len(),
                sc.backend_calls,
                sc.cache_hits
            );
            out_line(stdout, &format!("{}\n", path.display()))
        }
        Err(failure) => {
            let written = failure.partial.write(&path);
            let _ = match written {
                Ok(()) => writeln!(
                    stderr,
                    "partial manifest with {} completed instances written to {}",
                    failure.partial.records.len(),
                    path.display()
                ),
                Err(e) => writeln!(stderr, "could not write partial manifest: {e}"),
            };
            Err(match failure.error {
                e @ (RunError::Config(_) | RunError::Prompt { .. }) => validation(e),
                e => runtime(e),
            })
        }
    }
}

fn evaluate_cmd(args: EvaluateArgs, stdout: &mut dyn Write) -> Outcome {
    let m = RunManifest::read(&args.manifest).map_err(|e| match e {
        manifest::ManifestError::Io { .. } => runtime(e),
        _ => validation(e),
    })?;
    let corpus_path = args.corpus.unwrap_or_else(|| m.header.config.corpus.clone());
    let corpus = corpus_io::load_corpus(&corpus_path).map_err(load_failure)?;
    let opts = EvaluateOptions {
        extract: ExtractOptions { retry_later_candidates: args.retry_later_candidates },
        denominator: match args.denominator {
            DenominatorArg::All => Denominator::AllInstances,
            DenominatorArg::ExcludeInvalid => Denominator::ExcludeInvalid,
        },
        allow_partial: args.allow_partial,
    };
    let evaluation = evaluate(&m, &corpus, opts).map_err(validation)?;
    let dir = match args.out {
        Some(d) => d,
        None => args.manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    write_reports(&evaluation, &dir, &manifest::stem(&args.manifest))
        .with_context(|| dir.display().to_string())
        .map_err(runtime)?;
    out_line(stdout, &report::render(&evaluation.report, args.format))
}

fn report_cmd(format: Format, paths: &[PathBuf], stdout: &mut dyn Write) -> Outcome {
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(runtime)?;
        let r: RunReport = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a report file", path.display()))
            .map_err(validation)?;
        reports.push(r);
    }
    out_line(stdout, &report::render_summary(&reports, format))
}

fn prompts_show(
    task: Task,
    shot: Shot,
    n: Option<Window>,
    corpus: Option<PathBuf>,
    target: Option<(String, usize)>,
    reading: WindowReading,
    stdout: &mut dyn Write,
) -> Outcome {
    let messages = match target {
        None => template_messages(task, shot),
        Some((id, turn)) => {
            let path = corpus.ok_or_else(|| validation(anyhow::anyhow!("--conversation needs --corpus")))?;
            let corpus = corpus_io::load_corpus(&path).map_err(load_failure)?;
            let conversation = corpus
                .conversation(&id)
                .ok_or_else(|| validation(anyhow::anyhow!("no conversation {id:?} in {}", path.display())))?;
            let mode = match task {
                Task::Acts => PromptMode::acts(shot, n.unwrap_or(Window::All)),
                Task::Knowledge => PromptMode::knowledge(shot),
            };
            build_prompt(conversation, turn, mode, reading).map_err(validation)?
        }
    };
    out_line(stdout, &transcript(&messages))
}

fn extract_cmd(kind: KindArg, opts: ExtractOptions, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Outcome {
    let mut text = String::new();
    stdin.read_to_string(&mut text).map_err(runtime)?;
    let kind = match kind {
        KindArg::Act => ExtractKind::Act,
        KindArg::Graph => ExtractKind::Graph,
    };
    match extract(kind, &text, opts).map_err(validation)? {
        Extracted::Act(act) => out_line(stdout, &format!("{}\n", act.as_str())),
        Extracted::Graph(slice) => out_line(stdout, &format!("{slice}\n")),
    }
}

fn gold_script_cmd(file: &FileConfig, target: &TargetArgs, out: &Path, stdout: &mut dyn Write) -> Outcome {
    let mut cfg = run_config(file, target, BackendKind::Scripted)?;
    cfg.script = Some(out.to_path_buf());
    let corpus = corpus_io::load_corpus(&cfg.corpus).map_err(load_failure)?;
    let script = runner::gold_script(&cfg, &corpus).map_err(validation)?;
    let mut json = serde_json::to_string_pretty(&script).map_err(runtime)?;
    json.push('\n');
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    fs::write(out, json).with_context(|| out.display().to_string()).map_err(runtime)?;
    out_line(stdout, &format!("{} rules written to {}\n", script.rules.len(), out.display()))
}
