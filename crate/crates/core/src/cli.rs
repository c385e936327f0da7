//! The `argcascade` command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or transport failure.
//! Settings resolve as flags, then the `--config` file, then environment.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::base_model::{load_predictions, BaseModelError, PredictionFile, PredictionRecord};
use crate::calibration::{calibrate, calibrate_with, CalibrationError, ScoreMode};
use crate::cascade::{base_results, read_results, run_cascade, write_results, CascadeError, Source};
use crate::corpus::{
    self, class_distribution, parse_argsme, parse_ukp, parse_us2016, portal_name, read_interchange,
    split, write_interchange, ArgsmeCondition, ArgumentSample, CorpusError, LabelScheme, SplitSpec,
};
use crate::http::RetryPolicy;
use crate::metrics::{compare, evaluate, EvaluationReport, MetricsError};
use crate::refiner::{
    render_all, ChatConfig, ChatRefiner, LabelReplyRefiner, Refiner, RefinerError,
    TranscriptRefiner,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<BaseModelError> for CliError {
    fn from(e: BaseModelError) -> Self {
        match e {
            BaseModelError::Io(_) | BaseModelError::Http(_) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RefinerError> for CliError {
    fn from(e: RefinerError) -> Self {
        match e {
            RefinerError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::Refiner(r) => r.into(),
            CascadeError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "argcascade", version, about = "Confidence-gated argument classification cascade")]
pub struct Cli {
    /// Key-value config file (TOML syntax, flat keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw corpus into interchange JSONL and print its class distribution.
    Ingest(IngestArgs),
    /// Deterministic train/test split of an interchange file.
    Split(SplitArgs),
    /// Derive the delegation threshold from a prediction file.
    Calibrate(CalibrateArgs),
    /// Run the cascade and write results plus reports.
    Run(RunArgs),
    /// Evaluate a grid of delegation fractions (mock or cached LLM only).
    Sweep(SweepArgs),
    /// Evaluate a results or prediction file against gold labels.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusName {
    #[value(alias = "args.me")]
    Argsme,
    Ukp,
    Us2016,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub corpus: CorpusName,
    /// Args.me portal (idebate, debatepedia, debatewise, ...) or UKP topic.
    pub subset: Option<String>,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Args.me: drop the conclusion (claim-only condition).
    #[arg(long)]
    pub without_conclusion: bool,
    /// Expected count per class, e.g. `--expect RA=2744`. Repeatable.
    #[arg(long = "expect", value_parser = parse_expectation)]
    pub expect: Vec<(String, usize)>,
    #[arg(long)]
    pub expect_pro: Option<usize>,
    #[arg(long)]
    pub expect_con: Option<usize>,
    #[arg(long)]
    pub expect_non: Option<usize>,
    #[arg(long)]
    pub expect_total: Option<usize>,
}

fn parse_expectation(s: &str) -> Result<(String, usize), String> {
    let (class, count) = s
        .split_once('=')
        .ok_or_else(|| format!("expected CLASS=COUNT, got `{s}`"))?;
    let count = count
        .trim()
        .parse()
        .map_err(|e| format!("bad count in `{s}`: {e}"))?;
    Ok((class.trim().to_ascii_uppercase(), count))
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_stratify: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Score with 1 - p(gold) instead of 1 - max p. Analysis only; needs
    /// gold labels in the prediction file.
    #[arg(long)]
    pub oracle_score: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrateOn {
    Train,
    Eval,
}

#[derive(Debug, Args, Clone)]
pub struct LlmArgs {
    /// `echo`, `oracle`, or `transcript:PATH`.
    #[arg(long)]
    pub mock_llm: Option<String>,
    #[arg(long)]
    pub llm_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Maximum requests per second.
    #[arg(long)]
    pub rate_limit: Option<f64>,
    /// Serve replies from the cache only.
    #[arg(long)]
    pub offline: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Interchange samples covering the evaluation ids (texts and gold labels).
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub train_predictions: Option<PathBuf>,
    #[arg(long)]
    pub eval_predictions: PathBuf,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub calibrate_on: Option<CalibrateOn>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Print the delegation count and a token estimate; no calls.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub train_predictions: Option<PathBuf>,
    #[arg(long)]
    pub eval_predictions: PathBuf,
    #[arg(long, value_enum)]
    pub calibrate_on: Option<CalibrateOn>,
    /// Comma-separated fractions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Permit sweeping against a live endpoint.
    #[arg(long)]
    pub allow_spend: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Cascade results JSONL.
    #[arg(long, conflicts_with = "predictions")]
    pub results: Option<PathBuf>,
    /// Prediction file, scored as a base-only run.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Interchange samples providing gold labels.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Report JSON to diff against (printed as current minus baseline).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

/// Values readable from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub fraction: Option<f64>,
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub calibrate_on: Option<CalibrateOn>,
    pub llm_url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub rate_limit: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_FRACTION: f64 = 0.2;

/// Parses `args` (program name first) and runs, writing to `out`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Validation(e.to_string())),
    };
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a, out),
        Command::Split(a) => cmd_split(a, &config, out),
        Command::Calibrate(a) => cmd_calibrate(a, &config, out),
        Command::Run(a) => cmd_run(a, &config, out),
        Command::Sweep(a) => cmd_sweep(a, &config, out),
        Command::Report(a) => cmd_report(a, out),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run_with(args, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_distribution(
    out: &mut dyn Write,
    samples: &[ArgumentSample],
    scheme: LabelScheme,
) -> Result<indexmap::IndexMap<String, usize>, CliError> {
    let dist = class_distribution(samples, scheme);
    writeln!(out, "{:<8} {:>8}", "class", "count")?;
    for (class, count) in &dist {
        writeln!(out, "{class:<8} {count:>8}")?;
    }
    writeln!(out, "{:<8} {:>8}", "total", samples.len())?;
    Ok(dist)
}

fn cmd_ingest(args: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input = open(&args.input)?;
    let (samples, scheme) = match args.corpus {
        CorpusName::Argsme => {
            let condition = if args.without_conclusion {
                ArgsmeCondition::WithoutConclusion
            } else {
                ArgsmeCondition::WithConclusion
            };
            let mut samples = parse_argsme(input, condition)?;
            if let Some(portal) = &args.subset {
                let wanted = format!("args.me/{}", portal_name(portal));
                samples.retain(|s| s.corpus == wanted);
            }
            (samples, LabelScheme::ArgsmeBinary)
        }
        CorpusName::Ukp => {
            let topic = args.subset.as_deref().ok_or_else(|| {
                CliError::Validation(format!(
                    "ukp needs a topic: one of {}",
                    corpus::UKP_TOPICS.join(", ")
                ))
            })?;
            (parse_ukp(input, topic)?, LabelScheme::UkpTernary)
        }
        CorpusName::Us2016 => (parse_us2016(input)?, LabelScheme::Us2016Quaternary),
    };
    if samples.is_empty() {
        eprintln!("warning: {} yielded no samples", args.input.display());
    }
    if let Some(path) = &args.output {
        write_interchange(&samples, create(path)?)?;
    }
    let dist = write_distribution(out, &samples, scheme)?;

    let mut expected: Vec<(String, usize)> = args.expect.clone();
    for (class, value) in [
        ("PRO", args.expect_pro),
        ("CON", args.expect_con),
        ("NON", args.expect_non),
    ] {
        if let Some(v) = value {
            expected.push((class.to_string(), v));
        }
    }
    let mut mismatches = Vec::new();
    for (class, want) in &expected {
        let got = dist.get(class.as_str()).copied().unwrap_or(0);
        if got != *want {
            mismatches.push(format!("{class}: expected {want}, got {got}"));
        }
    }
    if let Some(want) = args.expect_total.filter(|w| *w != samples.len()) {
        mismatches.push(format!("total: expected {want}, got {}", samples.len()));
    }
    if !mismatches.is_empty() {
        for m in &mismatches {
            writeln!(out, "MISMATCH {m}")?;
        }
        return Err(CliError::Validation(format!(
            "class counts differ from expectations: {}",
            mismatches.join("; ")
        )));
    }
    Ok(())
}

fn cmd_split(args: SplitArgs, config: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let samples = read_interchange(open(&args.input)?)?;
    let spec = SplitSpec {
        train_fraction: args
            .fraction
            .or(config.train_fraction)
            .unwrap_or(SplitSpec::default().train_fraction),
        seed: args.seed.or(config.seed).unwrap_or(SplitSpec::default().seed),
        stratified: !args.no_stratify,
    };
    let (train, test) = split(&samples, &spec)?;
    write_interchange(&train, create(&args.train_out)?)?;
    write_interchange(&test, create(&args.test_out)?)?;
    writeln!(out, "train {}  test {}", train.len(), test.len())?;
    Ok(())
}

fn resolve_fraction(flag: Option<f64>, config: &FileConfig) -> Result<f64, CliError> {
    let f = flag.or(config.fraction).unwrap_or(DEFAULT_FRACTION);
    if !(0.0..=1.0).contains(&f) {
        return Err(CliError::Validation(format!("fraction {f} outside [0, 1]")));
    }
    Ok(f)
}

fn cmd_calibrate(args: CalibrateArgs, config: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_predictions(open(&args.predictions)?)?;
    let fraction = resolve_fraction(args.fraction, config)?;
    let mode = if args.oracle_score {
        ScoreMode::OracleGold
    } else {
        ScoreMode::Confidence
    };
    let profile = calibrate_with(&file.records(), fraction, mode, &file.gold)?;
    let json = profile.to_json();
    if let Some(path) = &args.output {
        let mut f = create(path)?;
        writeln!(f, "{json}")?;
    }
    writeln!(out, "{json}")?;
    Ok(())
}

/// Inputs shared by `run` and `sweep`.
struct CascadeInputs {
    samples: Vec<ArgumentSample>,
    train: Vec<PredictionRecord>,
    eval: PredictionFile,
    gold: HashMap<String, String>,
}

fn load_inputs(
    samples: &Path,
    train: Option<&Path>,
    eval: &Path,
    calibrate_on: CalibrateOn,
) -> Result<CascadeInputs, CliError> {
    let samples = read_interchange(open(samples)?)?;
    let eval = load_predictions(open(eval)?)?;
    let train = match (calibrate_on, train) {
        (CalibrateOn::Eval, _) => eval.records(),
        (CalibrateOn::Train, Some(path)) => {
            let train = load_predictions(open(path)?)?;
            if train.scheme != eval.scheme {
                return Err(CliError::Validation(format!(
                    "train predictions are {} but eval predictions are {}",
                    train.scheme, eval.scheme
                )));
            }
            train.records()
        }
        (CalibrateOn::Train, None) => {
            return Err(CliError::Validation(
                "--train-predictions is required unless --calibrate-on eval".into(),
            ))
        }
    };
    let mut gold: HashMap<String, String> = eval.gold.clone();
    for s in &samples {
        gold.insert(s.id.clone(), s.gold_label.clone());
    }
    Ok(CascadeInputs {
        samples,
        train,
        eval,
        gold,
    })
}

fn build_refiner(
    llm: &LlmArgs,
    config: &FileConfig,
    inputs: &CascadeInputs,
) -> Result<(Box<dyn Refiner>, bool), CliError> {
    if let Some(mock) = &llm.mock_llm {
        let refiner: Box<dyn Refiner> = match mock.as_str() {
            "echo" => Box::new(LabelReplyRefiner::new(
                "echo",
                inputs
                    .eval
                    .records
                    .values()
                    .map(|r| (r.sample_id.clone(), r.predicted_label.clone()))
                    .collect(),
            )),
            "oracle" => Box::new(LabelReplyRefiner::new("oracle", inputs.gold.clone())),
            other => match other.strip_prefix("transcript:") {
                Some(path) => Box::new(TranscriptRefiner::load(open(Path::new(path))?)?),
                None => {
                    return Err(CliError::Validation(format!(
                        "unknown --mock-llm `{other}` (echo, oracle, transcript:PATH)"
                    )))
                }
            },
        };
        return Ok((refiner, false));
    }
    let url = llm.llm_url.clone().or_else(|| config.llm_url.clone()).ok_or_else(|| {
        CliError::Validation("no LLM configured: pass --llm-url or --mock-llm".into())
    })?;
    let mut chat = ChatConfig::new(
        url,
        llm.model
            .clone()
            .or_else(|| config.model.clone())
            .unwrap_or_else(|| DEFAULT_MODEL.to_string()),
    );
    chat.api_key = config.api_key.clone();
    chat = chat.with_env_key();
    chat.cache_dir = llm.cache_dir.clone().or_else(|| config.cache_dir.clone());
    if let Some(p) = llm.parallelism.or(config.parallelism) {
        chat.parallelism = p.max(1);
    }
    chat.requests_per_second = llm.rate_limit.or(config.rate_limit);
    chat.retry = RetryPolicy::new(5).with_base_delay(Duration::from_millis(500));
    chat.offline = llm.offline;
    let live = !chat.offline;
    Ok((Box::new(ChatRefiner::new(chat)?), live))
}

fn write_report(dir: &Path, stem: &str, report: &EvaluationReport) -> Result<(), CliError> {
    let mut json = create(&dir.join(format!("{stem}.json")))?;
    writeln!(json, "{}", report.to_json())?;
    let mut txt = create(&dir.join(format!("{stem}.txt")))?;
    write!(txt, "{}", report.to_table())?;
    Ok(())
}

fn cmd_run(args: RunArgs, config: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let fraction = resolve_fraction(args.fraction, config)?;
    let calibrate_on = args
        .calibrate_on
        .or(config.calibrate_on)
        .unwrap_or(CalibrateOn::Train);
    let inputs = load_inputs(
        &args.samples,
        args.train_predictions.as_deref(),
        &args.eval_predictions,
        calibrate_on,
    )?;
    let scheme = inputs.eval.scheme;
    let eval_records = inputs.eval.records();
    let profile = calibrate(&inputs.train, fraction)?;
    writeln!(
        out,
        "calibration: n = {}  fraction = {}  k = {}  gamma = {}",
        profile.n(),
        profile.delegation_fraction(),
        profile.k(),
        profile.gamma()
    )?;

    if args.dry_run {
        let delegated: Vec<&PredictionRecord> = eval_records
            .iter()
            .filter(|r| profile.delegates(r.uncertainty))
            .collect();
        let by_id: HashMap<&str, &ArgumentSample> =
            inputs.samples.iter().map(|s| (s.id.as_str(), s)).collect();
        let views = delegated
            .iter()
            .map(|r| {
                by_id
                    .get(r.sample_id.as_str())
                    .map(|s| s.unlabeled())
                    .ok_or_else(|| CliError::Validation(format!("no sample for `{}`", r.sample_id)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let prompts = render_all(&views)?;
        // rough: ~4 characters per token, ~30 tokens per one-sentence reply
        let prompt_tokens: usize = prompts.iter().map(|p| p.chars().count().div_ceil(4)).sum();
        writeln!(
            out,
            "dry run: {} of {} eval records would be delegated; estimated tokens: prompt ~{}, completion ~{}",
            delegated.len(),
            eval_records.len(),
            prompt_tokens,
            30 * delegated.len()
        )?;
        return Ok(());
    }

    let (refiner, _) = build_refiner(&args.llm, config, &inputs)?;
    let output = run_cascade(&eval_records, &inputs.samples, &profile, refiner.as_ref())?;

    fs::create_dir_all(&args.out_dir)?;
    let mut pf = create(&args.out_dir.join("profile.json"))?;
    writeln!(pf, "{}", profile.to_json())?;
    write_results(&output.results, create(&args.out_dir.join("results.jsonl"))?)?;

    let report = evaluate(&output.results, &inputs.gold, scheme)?.with_cost(output.cost);
    let base = evaluate(&base_results(&eval_records), &inputs.gold, scheme)?;
    write_report(&args.out_dir, "report", &report)?;
    write_report(&args.out_dir, "base_report", &base)?;

    writeln!(out, "cascade ({}):", refiner.name())?;
    write!(out, "{}", report.to_table())?;
    writeln!(out, "change vs base:")?;
    write!(out, "{}", compare(&base, &report)?.to_table())?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs, config: &FileConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let calibrate_on = args
        .calibrate_on
        .or(config.calibrate_on)
        .unwrap_or(CalibrateOn::Train);
    let inputs = load_inputs(
        &args.samples,
        args.train_predictions.as_deref(),
        &args.eval_predictions,
        calibrate_on,
    )?;
    let (refiner, live) = build_refiner(&args.llm, config, &inputs)?;
    if live && !args.allow_spend {
        return Err(CliError::Validation(
            "refusing to sweep against a live endpoint; use --mock-llm, --offline, or --allow-spend".into(),
        ));
    }
    if let Some(bad) = args.grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(CliError::Validation(format!("fraction {bad} outside [0, 1]")));
    }
    let scheme = inputs.eval.scheme;
    let eval_records = inputs.eval.records();

    let mut rows = Vec::new();
    for &fraction in &args.grid {
        let profile = calibrate(&inputs.train, fraction)?;
        let output = run_cascade(&eval_records, &inputs.samples, &profile, refiner.as_ref())?;
        let report = evaluate(&output.results, &inputs.gold, scheme)?;
        rows.push((fraction, report.top1, report.macro_f1, output.cost.llm_calls));
    }

    let write_rows = |w: &mut dyn Write| -> Result<(), CliError> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["fraction", "top1", "macro_f1", "llm_calls"])?;
        for (f, top1, macro_f1, calls) in &rows {
            csv.write_record([
                f.to_string(),
                format!("{:.2}", crate::metrics::round2(*top1)),
                format!("{:.2}", crate::metrics::round2(*macro_f1)),
                calls.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    };
    if let Some(path) = &args.output {
        let mut f = create(path)?;
        write_rows(&mut f)?;
    }
    write_rows(out)
}

fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let samples = match &args.samples {
        Some(p) => read_interchange(open(p)?)?,
        None => Vec::new(),
    };
    let mut gold: HashMap<String, String> = HashMap::new();

    let report = match (&args.results, &args.predictions) {
        (Some(path), _) => {
            let results = read_results(open(path)?)?;
            for s in &samples {
                gold.insert(s.id.clone(), s.gold_label.clone());
            }
            let scheme = samples.first().map(|s| s.scheme).ok_or_else(|| {
                CliError::Validation("--samples is required to score a results file".into())
            })?;
            let cost = crate::cascade::CostTally {
                llm_calls: results.iter().filter(|r| r.source != Source::Base).count() as u64,
                ..Default::default()
            };
            evaluate(&results, &gold, scheme)?.with_cost(cost)
        }
        (None, Some(path)) => {
            let file = load_predictions(open(path)?)?;
            gold.extend(file.gold.clone());
            for s in &samples {
                gold.insert(s.id.clone(), s.gold_label.clone());
            }
            evaluate(&file.records(), &gold, file.scheme)?
        }
        (None, None) => {
            return Err(CliError::Validation(
                "pass --results or --predictions".into(),
            ))
        }
    };
    if args.json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        write!(out, "{}", report.to_table())?;
    }
    if let Some(path) = &args.baseline {
        let text = fs::read_to_string(path)?;
        let baseline: EvaluationReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        writeln!(out, "change vs {}:", path.display())?;
        write!(out, "{}", compare(&baseline, &report)?.to_table())?;
    }
    Ok(())
}
