//! The `slotforge` command line.
//!
//! Subcommands compose through files: `prepare` writes examples, `fetch`
//! and `transform` write predictions, `evaluate` writes reports. Settings
//! resolve as flags, then environment, then a TOML file given by `--config`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 generation-service error. Every output file is written to a temporary
//! sibling and renamed into place only once the whole command succeeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::corpus::{parse_corpus, split_train_validation, validate_corpus, AnswerPolicy, Corpus, EventType};
use crate::editdist::{transform_run, CaseMode, SnapResult};
use crate::metrics::{underestimation, UnderestimationReport};
use crate::predict::{fetch_predictions, load_predictions, GenerationClient, RawPrediction, ENDPOINT_ENV};
use crate::seqgen::{self, build_all, profile_lengths, EventQuestions, Example, ExampleKind, QuestionBank};

/// Environment variable holding a bearer token for the generation service.
pub const TOKEN_ENV: &str = "SLOTFORGE_GEN_TOKEN";

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Remote(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Remote(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Remote(e) => e,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "slotforge",
    version,
    about = "Slot-filling sequence construction, answer snapping and exact-match evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build source/target examples from a corpus.
    Prepare(PrepareArgs),
    /// Snap raw predictions onto candidate choices.
    Transform(TransformArgs),
    /// Score predictions with exact-match precision/recall/F1.
    Evaluate(EvaluateArgs),
    /// Request predictions for slot examples from a generation service.
    Fetch(FetchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Compare answers case-insensitively (default).
    #[arg(long, global = true, conflicts_with = "cased")]
    pub uncased: bool,
    /// Compare answers case-sensitively.
    #[arg(long, global = true)]
    pub cased: bool,
    /// Candidate meaning "no answer"; repeatable. Defaults to "not specified".
    #[arg(long = "null-answer", global = true, value_name = "S")]
    pub null_answers: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Examples file to write (default: <out>/examples.jsonl).
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Also write a train/validation split with this validation ratio.
    #[arg(long, value_name = "RATIO")]
    pub split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON object mapping event names to event questions.
    #[arg(long)]
    pub question_bank: Option<PathBuf>,
    /// Ask all five event questions per tweet instead of only its own.
    #[arg(long)]
    pub all_event_questions: bool,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RemoteArgs {
    /// Generation service base URL (falls back to SLOTFORGE_GEN_ENDPOINT).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub remote: RemoteArgs,
    #[arg(long, conflicts_with = "endpoint")]
    pub predictions: Option<PathBuf>,
    /// Slot examples to send when predicting through --endpoint (default:
    /// built from the corpus).
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// `raw,post`: also snap the predictions and report both runs.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<String>,
    /// Run name used in reports.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub remote: RemoteArgs,
    /// Examples file; event examples in it are skipped. Without it, slot
    /// examples are built from --corpus.
    #[arg(long)]
    pub examples: Option<PathBuf>,
}

/// Settings read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub examples: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub uncased: Option<bool>,
    pub null_answers: Option<Vec<String>>,
    pub split: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub question_bank: Option<PathBuf>,
    pub batch_size: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

/// Where a run's predictions come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionSource {
    File(PathBuf),
    Endpoint(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteSettings {
    pub batch_size: usize,
    pub timeout: Duration,
    pub retries: u32,
    pub max_in_flight: usize,
    pub bearer_token: Option<String>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub examples_path: Option<PathBuf>,
    pub predictions: Option<PredictionSource>,
    pub policy: AnswerPolicy,
    pub split: Option<(f64, u64)>,
    pub out_dir: PathBuf,
    pub question_bank: Option<PathBuf>,
    pub remote: RemoteSettings,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::Usage)?;
    toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(Failure::Usage)
}

fn env_nonempty(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl RunConfig {
    fn resolve(common: &CommonArgs, remote: Option<&RemoteArgs>, file: &FileConfig) -> Self {
        let case = if common.cased {
            CaseMode::Cased
        } else if common.uncased {
            CaseMode::Uncased
        } else {
            match file.uncased {
                Some(false) => CaseMode::Cased,
                _ => CaseMode::Uncased,
            }
        };
        let null_answers = if !common.null_answers.is_empty() {
            common.null_answers.clone()
        } else {
            file.null_answers
                .clone()
                .unwrap_or_else(|| AnswerPolicy::default().null_answers)
        };
        let remote = remote.cloned().unwrap_or_default();
        RunConfig {
            corpus_path: common.corpus.clone().or_else(|| file.corpus.clone()),
            examples_path: file.examples.clone(),
            predictions: None,
            policy: AnswerPolicy { case, null_answers },
            split: None,
            out_dir: common
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            question_bank: file.question_bank.clone(),
            remote: RemoteSettings {
                batch_size: remote.batch_size.or(file.batch_size).unwrap_or(16),
                timeout: Duration::from_secs(remote.timeout_secs.or(file.timeout_secs).unwrap_or(120)),
                retries: remote.retries.or(file.retries).unwrap_or(3),
                max_in_flight: remote.max_in_flight.or(file.max_in_flight).unwrap_or(1),
                bearer_token: env_nonempty(TOKEN_ENV),
            },
        }
    }

    fn endpoint(flag: Option<&String>, file: &FileConfig) -> Option<String> {
        flag.cloned()
            .or_else(|| env_nonempty(ENDPOINT_ENV))
            .or_else(|| file.endpoint.clone())
    }

    fn corpus_path(&self) -> Result<&Path, Failure> {
        self.corpus_path.as_deref().ok_or_else(|| usage("--corpus is required"))
    }

    fn client(&self, endpoint: &str) -> GenerationClient {
        GenerationClient::new(endpoint)
            .timeout(self.remote.timeout)
            .retries(self.remote.retries)
            .max_in_flight(self.remote.max_in_flight)
            .bearer_token(self.remote.bearer_token.clone())
    }
}

/// Files staged for an all-or-nothing write.
struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    fn new() -> Self {
        Self { staged: Vec::new() }
    }

    fn add(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), Failure> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(data)?;
        let mut tmp = NamedTempFile::new_in(&dir)
            .with_context(|| format!("staging {}", path.display()))
            .map_err(data)?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.flush())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(data)?;
        self.staged.push((tmp, path));
        Ok(())
    }

    fn add_jsonl<T: Serialize>(&mut self, path: PathBuf, records: &[T]) -> Result<(), Failure> {
        let mut buf = Vec::new();
        for record in records {
            serde_json::to_writer(&mut buf, record).map_err(data)?;
            buf.push(b'\n');
        }
        self.add(path, &buf)
    }

    fn add_json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<(), Failure> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(data)?;
        buf.push(b'\n');
        self.add(path, &buf)
    }

    fn commit(self) -> Result<Vec<PathBuf>, Failure> {
        let mut written = Vec::with_capacity(self.staged.len());
        for (tmp, path) in self.staged {
            tmp.persist(&path)
                .with_context(|| format!("renaming into {}", path.display()))
                .map_err(data)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn load_corpus(config: &RunConfig) -> Result<Corpus, Failure> {
    let path = config.corpus_path()?;
    let file = File::open(path)
        .with_context(|| format!("opening corpus {}", path.display()))
        .map_err(data)?;
    let corpus = parse_corpus(BufReader::new(file), &config.policy)
        .with_context(|| format!("parsing corpus {}", path.display()))
        .map_err(data)?;
    let report = validate_corpus(&corpus);
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(data(anyhow!("corpus is invalid:\n  {}", lines.join("\n  "))));
    }
    Ok(corpus)
}

fn load_question_bank(path: Option<&Path>) -> Result<QuestionBank, Failure> {
    let Some(path) = path else {
        return Ok(QuestionBank::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading question bank {}", path.display()))
        .map_err(data)?;
    let overrides: BTreeMap<EventType, String> = serde_json::from_str(&text)
        .with_context(|| format!("parsing question bank {}", path.display()))
        .map_err(data)?;
    let mut bank = QuestionBank::default();
    for (event, question) in overrides {
        bank.set(event, question);
    }
    Ok(bank)
}

fn write_corpus_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf).expect("writing to memory");
    buf
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<(), Failure> {
    let file = load_file_config(args.common.config.as_deref())?;
    let mut config = RunConfig::resolve(&args.common, None, &file);
    config.examples_path = args.examples.clone().or(config.examples_path);
    config.question_bank = args.question_bank.clone().or(config.question_bank);
    if let Some(ratio) = args.split.or(file.split) {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(usage(format!("--split must lie strictly between 0 and 1, got {ratio}")));
        }
        config.split = Some((ratio, args.seed.or(file.seed).unwrap_or(0)));
    }

    let corpus = load_corpus(&config)?;
    let bank = load_question_bank(config.question_bank.as_deref())?;
    let mode = if args.all_event_questions {
        EventQuestions::All
    } else {
        EventQuestions::OwnEvent
    };
    let examples = build_all(&corpus, &bank, mode).map_err(data)?;
    let profile = profile_lengths(&examples);

    let mut outputs = Outputs::new();
    let examples_path = config
        .examples_path
        .clone()
        .unwrap_or_else(|| config.out_dir.join("examples.jsonl"));
    outputs.add_jsonl(examples_path, &examples)?;
    if let Some((ratio, seed)) = config.split {
        let (train, validation) = split_train_validation(&corpus, ratio, seed).map_err(data)?;
        outputs.add(config.out_dir.join("train.jsonl"), &write_corpus_bytes(&train))?;
        outputs.add(
            config.out_dir.join("validation.jsonl"),
            &write_corpus_bytes(&validation),
        )?;
        println!(
            "split: {} train / {} validation tweets (seed {seed})",
            train.len(),
            validation.len()
        );
    }
    let written = outputs.commit()?;

    println!("tweets: {}", corpus.len());
    println!("examples: {}", examples.len());
    println!("max source tokens (whitespace): {}", profile.max_source_tokens);
    println!("max target tokens (whitespace): {}", profile.max_target_tokens);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// One line of a transformed predictions file. Loads as a prediction file.
#[derive(Debug, Serialize)]
struct SnappedRecord<'a> {
    tweet_id: &'a str,
    slot: &'a str,
    text: String,
    raw: &'a str,
    snaps: &'a [SnapResult],
}

fn snap_run(predictions: &[RawPrediction], corpus: &Corpus) -> Result<(Vec<RawPrediction>, Vec<u8>), Failure> {
    let results = transform_run(predictions, corpus, corpus.policy().case);
    let mut errors = Vec::new();
    let mut snapped = Vec::with_capacity(results.len());
    let mut file = Vec::new();
    for (key, result) in &results {
        match result {
            Ok(s) => {
                let record = SnappedRecord {
                    tweet_id: &s.key.tweet_id,
                    slot: &s.key.slot,
                    text: s.text(),
                    raw: &s.raw,
                    snaps: &s.snaps,
                };
                serde_json::to_writer(&mut file, &record).map_err(data)?;
                file.push(b'\n');
                snapped.push(s.to_prediction());
            }
            Err(e) => errors.push(format!("{key}: {e}")),
        }
    }
    if !errors.is_empty() {
        return Err(data(anyhow!(
            "{} prediction(s) could not be transformed:\n  {}",
            errors.len(),
            errors.join("\n  ")
        )));
    }
    Ok((snapped, file))
}

fn read_predictions_file(path: &Path) -> Result<Vec<RawPrediction>, Failure> {
    load_predictions(path)
        .with_context(|| format!("loading predictions {}", path.display()))
        .map_err(data)
}

pub fn cmd_transform(args: &TransformArgs) -> Result<(), Failure> {
    let file = load_file_config(args.common.config.as_deref())?;
    let config = RunConfig::resolve(&args.common, None, &file);
    let predictions_path = args
        .predictions
        .clone()
        .or(file.predictions)
        .ok_or_else(|| usage("--predictions is required"))?;
    let corpus = load_corpus(&config)?;
    let predictions = read_predictions_file(&predictions_path)?;
    let (snapped, bytes) = snap_run(&predictions, &corpus)?;

    let mut outputs = Outputs::new();
    outputs.add(config.out_dir.join("snapped.jsonl"), &bytes)?;
    let written = outputs.commit()?;
    let exact = snapped
        .iter()
        .zip(&predictions)
        .filter(|(s, p)| s.text == p.text)
        .count();
    println!("predictions: {}", predictions.len());
    println!("unchanged by transform: {exact}");
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn slot_examples(
    config: &RunConfig,
    examples_path: Option<&Path>,
    corpus: Option<&Corpus>,
) -> Result<Vec<Example>, Failure> {
    let examples = match (examples_path, corpus) {
        (Some(path), _) => {
            let file = File::open(path)
                .with_context(|| format!("opening examples {}", path.display()))
                .map_err(data)?;
            seqgen::read_examples(BufReader::new(file)).map_err(data)?
        }
        (None, Some(corpus)) => build_all(corpus, &QuestionBank::default(), EventQuestions::OwnEvent).map_err(data)?,
        (None, None) => {
            let corpus = load_corpus(config)?;
            return slot_examples(config, None, Some(&corpus));
        }
    };
    Ok(examples
        .into_iter()
        .filter(|e| e.key.kind == ExampleKind::Slot)
        .collect())
}

fn fetch(config: &RunConfig, endpoint: &str, examples: &[Example]) -> Result<Vec<RawPrediction>, Failure> {
    fetch_predictions(&config.client(endpoint), examples, config.remote.batch_size).map_err(|e| match e {
        crate::predict::FetchError::ZeroBatchSize | crate::predict::FetchError::NotSlotExample(_) => {
            Failure::Usage(e.into())
        }
        other => Failure::Remote(other.into()),
    })
}

pub fn cmd_fetch(args: &FetchArgs) -> Result<(), Failure> {
    let file = load_file_config(args.common.config.as_deref())?;
    let config = RunConfig::resolve(&args.common, Some(&args.remote), &file);
    let endpoint = RunConfig::endpoint(args.remote.endpoint.as_ref(), &file)
        .ok_or_else(|| usage(format!("--endpoint or {ENDPOINT_ENV} is required")))?;
    let examples_path = args.examples.clone().or(file.examples.clone());
    let examples = slot_examples(&config, examples_path.as_deref(), None)?;
    let predictions = fetch(&config, &endpoint, &examples)?;

    let mut outputs = Outputs::new();
    outputs.add_jsonl(config.out_dir.join("predictions.jsonl"), &predictions)?;
    let written = outputs.commit()?;
    println!("predictions: {}", predictions.len());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_compare(values: &[String]) -> Result<bool, Failure> {
    match values {
        [] => Ok(false),
        [a, b] if a == "raw" && b == "post" => Ok(true),
        _ => Err(usage(format!(
            "--compare accepts only `raw,post`, got `{}`",
            values.join(",")
        ))),
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let file = load_file_config(args.common.config.as_deref())?;
    let mut config = RunConfig::resolve(&args.common, Some(&args.remote), &file);
    let compare = parse_compare(&args.compare)?;
    let label = args.label.clone().unwrap_or_else(|| "run".to_owned());

    config.predictions = match (&args.predictions, &args.remote.endpoint) {
        (Some(_), Some(_)) => return Err(usage("--predictions and --endpoint are mutually exclusive")),
        (Some(p), None) => Some(PredictionSource::File(p.clone())),
        (None, Some(e)) => Some(PredictionSource::Endpoint(e.clone())),
        (None, None) => match (&file.predictions, RunConfig::endpoint(None, &file)) {
            (Some(p), None) => Some(PredictionSource::File(p.clone())),
            (None, Some(e)) => Some(PredictionSource::Endpoint(e)),
            (Some(_), Some(_)) => {
                return Err(usage(format!(
                    "both a predictions file and an endpoint ({ENDPOINT_ENV} or config) are set; pass one explicitly"
                )))
            }
            (None, None) => return Err(usage("one of --predictions or --endpoint is required")),
        },
    };

    let corpus = load_corpus(&config)?;
    let mut outputs = Outputs::new();
    let raw = match config.predictions.as_ref().expect("resolved above") {
        PredictionSource::File(path) => read_predictions_file(path)?,
        PredictionSource::Endpoint(endpoint) => {
            let examples_path = args.examples.clone().or(file.examples.clone());
            let examples = slot_examples(&config, examples_path.as_deref(), Some(&corpus))?;
            let predictions = fetch(&config, endpoint, &examples)?;
            outputs.add_jsonl(config.out_dir.join("predictions.jsonl"), &predictions)?;
            predictions
        }
    };

    if compare {
        let (snapped, snapped_bytes) = snap_run(&raw, &corpus)?;
        let mut report: UnderestimationReport = underestimation(&raw, &snapped, &corpus).map_err(data)?;
        report.raw.run_label = label.clone();
        report.post.run_label = format!("post-{label}");
        outputs.add(config.out_dir.join("snapped.jsonl"), &snapped_bytes)?;
        outputs.add_json(config.out_dir.join("report.raw.json"), &report.raw)?;
        outputs.add_json(config.out_dir.join("report.post.json"), &report.post)?;
        outputs.add_json(config.out_dir.join("underestimation.json"), &report)?;
        outputs.add(config.out_dir.join("underestimation.txt"), report.to_table().as_bytes())?;
        outputs.add_jsonl(config.out_dir.join("unmatched.jsonl"), &report.unmatched)?;
        let written = outputs.commit()?;
        print!("{}", report.to_table());
        for path in written {
            println!("wrote {}", path.display());
        }
    } else {
        // Without a transform, unmatched compares the raw run with itself.
        let mut report = underestimation(&raw, &raw, &corpus).map_err(data)?;
        report.raw.run_label = label;
        outputs.add_json(config.out_dir.join("report.json"), &report.raw)?;
        outputs.add(config.out_dir.join("report.txt"), report.raw.to_table().as_bytes())?;
        outputs.add_jsonl(config.out_dir.join("unmatched.jsonl"), &report.unmatched)?;
        let written = outputs.commit()?;
        print!("{}", report.raw.to_table());
        println!("unmatched: {}", report.unmatched.len());
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Prepare(args) => cmd_prepare(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Fetch(args) => cmd_fetch(args),
    }
}

/// Parses `args` and runs the command, printing errors to standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.exit_code())
        }
    }
}

pub fn main_from_env() -> ExitCode {
    main_with_args(std::env::args_os())
}
