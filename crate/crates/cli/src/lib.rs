//! Subcommand implementations behind the `pathreward` binary.
//!
//! Every command writes its primary output to the supplied writer (stdout in
//! the binary) and returns a [`CliError`] whose [`CliError::exit_code`] is 1
//! for invalid input and 2 for filesystem failures.

use std::collections::BTreeSet;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pathreward_core::eval::{
    evaluate, ingest, pairwise_wilcoxon, rank_reports, render_table, EvalConfig, EvalError, LineError, MetricName,
    PairwiseTest, RankTable, TaskReport, TieMode,
};
use pathreward_core::grpo::toy::{run_toy, ToyConfig, ToyReport};
use pathreward_core::reward::{GroundTruth, ImageDims, RewardConfig, Scorer};
use pathreward_core::scaling::{plan_resize, ResizePlan, DEFAULT_PATCH, ROI_MAX_TOKENS};
use pathreward_core::TaskKind;
use pathreward_service::{handle_score, ScoreRequest, ScoreResponse};
use serde::{Deserialize, Serialize};

/// Environment variable holding the default listen address for `serve`.
pub const ADDR_ENV: &str = "PATHREWARD_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Verifiable rewards, evaluation statistics and a toy GRPO trainer.
///
/// Exit codes: 0 success, 1 invalid input or arguments, 2 I/O failure.
#[derive(Debug, Parser)]
#[command(name = "pathreward", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one response and print the reward breakdown as JSON.
    Score(ScoreArgs),
    /// Evaluate a JSONL prediction file: metrics with bootstrap CIs.
    Eval(EvalArgs),
    /// Rank models from one or more evaluation reports.
    Rank(RankArgs),
    /// Plan a patch-aligned resize under a token budget.
    Resize(ResizeArgs),
    /// Run supervised warm-up then GRPO on a toy policy.
    TrainToy(TrainToyArgs),
    /// Serve the scoring HTTP API until interrupted.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Task code: cls, det, seg, vqa_closed or vqa_open.
    #[arg(long)]
    pub task: TaskKind,
    /// Response text.
    #[arg(long, conflicts_with = "response_file", required_unless_present = "response_file")]
    pub response: Option<String>,
    /// File holding the response text.
    #[arg(long)]
    pub response_file: Option<PathBuf>,
    /// Ground truth as JSON, e.g. '{"label":"B"}'.
    #[arg(long)]
    pub gt: String,
    /// Weight of the format reward.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Prompt text; lettered options in it are used to read the answer.
    #[arg(long)]
    pub prompt: Option<String>,
    /// Image size as HxW (required for seg).
    #[arg(long, value_parser = parse_dims)]
    pub image: Option<ImageDims>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSONL prediction file, one record per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Bootstrap RNG seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Bootstrap resamples per (task, model) group.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Confidence level of the percentile intervals.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Only report these metrics (comma separated, e.g. ACC,F1).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricName>>,
    /// Also print a text table to standard error.
    #[arg(long)]
    pub table: bool,
    /// Write pairwise Wilcoxon signed-rank tests (JSON) here.
    #[arg(long)]
    pub wilcoxon: Option<PathBuf>,
    /// Fail instead of skipping records that do not parse or validate.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Report files, or directories of `*.json` reports.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Rank on this metric instead of each task's primary one.
    #[arg(long)]
    pub metric: Option<MetricName>,
    /// Dense ranking (1, 2, 2, 3) instead of competition (1, 2, 2, 4).
    #[arg(long)]
    pub dense: bool,
    /// Write the rank table as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResizeArgs {
    /// Input height in pixels.
    #[arg(long)]
    pub h: u64,
    /// Input width in pixels.
    #[arg(long)]
    pub w: u64,
    /// Visual token budget (256 for ROI, 1024 for WSI).
    #[arg(long, default_value_t = ROI_MAX_TOKENS)]
    pub max_tokens: u64,
    /// Patch edge in pixels.
    #[arg(long, default_value_t = DEFAULT_PATCH)]
    pub patch: u64,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    /// TOML config with GRPO keys at top level and `[[prompts]]` entries.
    #[arg(long)]
    pub config: PathBuf,
    /// Write the full run (trajectory, SFT losses, final policy) as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of GRPO steps.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address.
    #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
    pub addr: SocketAddr,
    /// Default weight of the format reward; requests may override it.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

fn parse_dims(s: &str) -> Result<ImageDims, String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got `{s}`"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    Ok(ImageDims::new(h, w))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

pub fn cmd_score(args: &ScoreArgs) -> Result<ScoreResponse, CliError> {
    let response = match (&args.response, &args.response_file) {
        (Some(r), _) => r.clone(),
        (None, Some(path)) => read_text(path)?,
        (None, None) => return Err(CliError::Validation("one of --response or --response-file is required".into())),
    };
    let gt: GroundTruth = serde_json::from_str(&args.gt).map_err(|e| CliError::Validation(format!("--gt: {e}")))?;
    let scorer = Scorer::new(RewardConfig::with_lambda(args.lambda).map_err(|e| CliError::Validation(e.to_string()))?)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let req = ScoreRequest {
        task: args.task,
        response,
        gt,
        lambda: None,
        image: args.image,
        prompt: args.prompt.clone(),
        options: None,
    };
    handle_score(&scorer, &req).map_err(|e| CliError::Validation(e.to_string()))
}

/// Everything `eval` writes as its main report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub bootstrap: usize,
    pub confidence: f64,
    /// Records that were scored.
    pub records: usize,
    /// Lines that were skipped.
    #[serde(default)]
    pub rejected: Vec<LineError>,
    pub reports: Vec<TaskReport>,
}

/// Result of an `eval` run; the serialized report is byte-stable for fixed
/// inputs and flags.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub json: String,
    pub wilcoxon: Option<Vec<PairwiseTest>>,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalOutput, CliError> {
    let cfg = EvalConfig {
        bootstrap: args.bootstrap,
        seed: args.seed,
        confidence: args.confidence,
        metrics: args.metrics.clone(),
    };
    cfg.validate()?;
    let ingested = ingest(&args.input)?;
    for e in &ingested.errors {
        log::warn!("{}:{}: {}", args.input.display(), e.line, e.message);
    }
    if args.strict && !ingested.errors.is_empty() {
        return Err(CliError::Validation(format!("{} invalid record(s)", ingested.errors.len())));
    }
    if ingested.records.is_empty() {
        return Err(CliError::Validation(format!("{}: no usable records", args.input.display())));
    }
    let reports = evaluate(&ingested.records, &cfg)?;
    let report = EvalReport {
        seed: cfg.seed,
        bootstrap: cfg.bootstrap,
        confidence: cfg.confidence,
        records: ingested.records.len(),
        rejected: ingested.errors,
        reports,
    };
    // underpowered pairs are logged and marked skipped by the test itself
    let wilcoxon = match args.wilcoxon {
        Some(_) => Some(pairwise_wilcoxon(&ingested.records)?),
        None => None,
    };
    Ok(EvalOutput { json: to_json(&report), report, wilcoxon })
}

/// A file accepted by `rank`: a full eval report or a bare report list.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ReportFile {
    Full(EvalReport),
    Bare(Vec<TaskReport>),
}

fn report_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = std::fs::read_dir(input).map_err(|e| CliError::io(input, e))?;
            let mut found = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(input, e))?.path();
                if path.is_file() && path.extension().is_some_and(|e| e == "json") {
                    found.push(path);
                }
            }
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

pub fn load_reports(inputs: &[PathBuf]) -> Result<Vec<TaskReport>, CliError> {
    let mut all = Vec::new();
    let mut seen = BTreeSet::new();
    for path in report_files(inputs)? {
        let text = read_text(&path)?;
        let parsed: ReportFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: not a report file: {e}", path.display())))?;
        let reports = match parsed {
            ReportFile::Full(r) => r.reports,
            ReportFile::Bare(r) => r,
        };
        for r in reports {
            if !seen.insert((r.task.clone(), r.model.clone(), r.metric)) {
                return Err(CliError::Validation(format!(
                    "{}: {} / {} / {} reported twice",
                    path.display(),
                    r.task,
                    r.model,
                    r.metric
                )));
            }
            all.push(r);
        }
    }
    if all.is_empty() {
        return Err(CliError::Validation("no reports found".into()));
    }
    Ok(all)
}

pub fn cmd_rank(args: &RankArgs) -> Result<RankTable, CliError> {
    let reports = load_reports(&args.inputs)?;
    let mode = if args.dense { TieMode::Dense } else { TieMode::Competition };
    let table = rank_reports(&reports, args.metric, mode);
    if table.tasks.is_empty() {
        return Err(CliError::Validation("no task has a value for every model".into()));
    }
    Ok(table)
}

pub fn cmd_resize(args: &ResizeArgs) -> Result<ResizePlan, CliError> {
    plan_resize(args.h, args.w, args.max_tokens, args.patch).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn cmd_train_toy(args: &TrainToyArgs) -> Result<ToyReport, CliError> {
    let text = read_text(&args.config)?;
    let mut cfg =
        ToyConfig::from_toml_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.grpo.seed = seed;
    }
    if let Some(n) = args.iterations {
        cfg.grpo.iterations = n;
    }
    run_toy(&cfg).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let scorer = Scorer::new(RewardConfig::with_lambda(args.lambda).map_err(|e| CliError::Validation(e.to_string()))?)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
    runtime
        .block_on(pathreward_service::run(args.addr, scorer))
        .map_err(|e| CliError::Io { path: args.addr.to_string(), source: e })
}

/// Run a parsed command line, writing primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Score(a) => {
            let r = cmd_score(a)?;
            emit(out, &format!("{}\n", serde_json::to_string(&r).expect("responses serialize")))
        }
        Command::Eval(a) => {
            let res = cmd_eval(a)?;
            if let (Some(path), Some(tests)) = (&a.wilcoxon, &res.wilcoxon) {
                write_text(path, &to_json(tests))?;
            }
            if a.table {
                eprint!("{}", render_table(&res.report.reports, a.confidence));
            }
            match &a.output {
                Some(path) => write_text(path, &res.json),
                None => emit(out, &res.json),
            }
        }
        Command::Rank(a) => {
            let table = cmd_rank(a)?;
            if let Some(path) = &a.output {
                write_text(path, &to_json(&table))?;
            }
            emit(out, &table.render())
        }
        Command::Resize(a) => {
            let plan = cmd_resize(a)?;
            emit(out, &format!("{}\n", serde_json::to_string(&plan).expect("plans serialize")))
        }
        Command::TrainToy(a) => {
            let report = cmd_train_toy(a)?;
            if let Some(path) = &a.output {
                write_text(path, &to_json(&report))?;
            }
            let summary = serde_json::json!({
                "steps": report.trajectory.len(),
                "initial_expected_reward": report.initial_expected_reward,
                "final_expected_reward": report.final_expected_reward(),
                "first_step_reaching_1.9": report.first_step_reaching(1.9),
                "sft_final_loss": report.sft_losses.last(),
            });
            emit(out, &format!("{summary}\n"))
        }
        Command::Serve(a) => cmd_serve(a),
    }
}
