//! Command-line interface.
//!
//! Run settings resolve in three layers: built-in defaults, then an optional
//! `--config` file (TOML or JSON, same shape as `--dump-config` output), then
//! flags. Exit codes: 0 success, 1 usage or validation error, 2 runtime
//! failure, 3 degraded run.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::backends::{Backend, BackendKind};
use crate::dataset::{make_synthetic_suite_with, resolve_frames, Suite, SyntheticOptions};
use crate::error::{Error, Result};
use crate::evaluator::{
    emit_report, read_report_csv, read_report_json, render_report, CellSpec, GridAxes, Harness, Mode, Preset,
    Report, ReportFormat, ResponseCache, RunConfig, RunMetadata,
};
use crate::masks::{MaskSource, RemoteMaskClient};
use crate::prompting::{build_prompt, StrategyFlags};
use crate::sampler::{draw_plan, PlanSummary, SamplingConfig};
use crate::trace::TraceLog;
use crate::visual::compose_cue_frames;

#[derive(Debug, Parser)]
#[command(name = "hoicue", version, about = "Gaze- and mask-cued VLLM evaluation for next-object anticipation")]
pub struct Cli {
    /// Print errors on stderr as JSON.
    #[arg(long, global = true)]
    pub json: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic suite (frames, gaze, masks, manifest).
    Fixtures(FixturesArgs),
    /// Print a frame sampling plan as JSON.
    Sample(SampleArgs),
    /// Write the cue-composited frames of one clip as PNGs.
    Render(RenderArgs),
    /// Print the prompt for one question.
    Prompt(PromptArgs),
    /// Evaluate one configuration.
    Run(RunArgs),
    /// Evaluate a grid of configurations.
    Grid(GridArgs),
    /// Convert a report between json, csv and markdown.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub width: u32,
    #[arg(long, default_value_t = 64)]
    pub height: u32,
    #[arg(long, default_value_t = 5.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub seconds: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Clip length in frames.
    #[arg(long)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Suite directory. Without it a synthetic suite is generated from --seed.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Size of the generated suite when --suite is absent.
    #[arg(long, default_value_t = 100)]
    pub synthetic: usize,
    /// Evaluate only the first N questions.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Segmentation service URL. Masks come from the suite's masks/ directory otherwise.
    #[arg(long)]
    pub masks_endpoint: Option<String>,
}

/// Settings shared by every subcommand that builds a run configuration.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    /// frame_list, video_fps, mock_fixed, mock_random or mock_scripted.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Requests per minute; 0 disables the limit.
    #[arg(long)]
    pub rpm: Option<u32>,
    #[arg(long)]
    pub mock_text: Option<String>,
    /// JSON object mapping question ids to replies.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    #[arg(long)]
    pub encoder: Option<String>,
    /// JSONL event log.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Include request and response bodies in the trace.
    #[arg(long)]
    pub trace_bodies: bool,
}

#[derive(Debug, Args, Default)]
pub struct CellArgs {
    /// vllm_only, som, gaze or som_gaze.
    #[arg(long)]
    pub strategy: Option<StrategyFlags>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Video frame rate; selects whole-video mode.
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub clip: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[command(flatten)]
    pub cell: CellArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[arg(long)]
    pub question: String,
    #[arg(long, default_value = "som_gaze")]
    pub strategy: StrategyFlags,
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report path. The format follows the extension unless --format is given;
    /// without --out a markdown table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json, csv or markdown.
    #[arg(long)]
    pub format: Option<ReportFormat>,
    /// Per-question predictions as JSONL (run only).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub cell: CellArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// table1, table2, table3 or table4.
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<StrategyFlags>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Vec<usize>,
    #[arg(long = "fps-values", value_delimiter = ',')]
    pub fps_values: Vec<f64>,
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A json or csv report.
    #[arg(long)]
    pub input: PathBuf,
    /// json, csv or markdown. Defaults to the --out extension, else markdown.
    #[arg(long)]
    pub format: Option<ReportFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let json_errors = cli.json;
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e, json_errors);
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}

fn report_error(e: &Error, as_json: bool) {
    if as_json {
        let mut v = json!({"error": e.kind(), "message": e.to_string()});
        if let Error::Environment { hint, .. } = e {
            v["hint"] = json!(hint);
        }
        eprintln!("{v}");
    } else {
        eprintln!("error: {e}");
        if let Error::Environment { hint, .. } = e {
            eprintln!("hint: {hint}");
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Fixtures(a) => fixtures(a),
        Command::Sample(a) => sample(a),
        Command::Render(a) => render(a),
        Command::Prompt(a) => prompt(a),
        Command::Run(a) => run(a),
        Command::Grid(a) => grid(a),
        Command::Report(a) => convert_report(a),
    }
}

fn print_json(value: &impl serde::Serialize) {
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, value);
    let _ = writeln!(out);
}

fn fixtures(a: FixturesArgs) -> Result<ExitCode> {
    let opts = SyntheticOptions {
        width: a.width,
        height: a.height,
        fps: a.fps,
        seconds: a.seconds,
        ..Default::default()
    };
    let records = make_synthetic_suite_with(a.count, a.seed, &a.out, &opts)?;
    print_json(&json!({"suite": a.out, "questions": records.len()}));
    Ok(ExitCode::SUCCESS)
}

fn sample(a: SampleArgs) -> Result<ExitCode> {
    let plan = draw_plan(a.frames, &SamplingConfig::new(a.lambda, a.n, a.seed)?)?;
    print_json(&PlanSummary::from(&plan));
    Ok(ExitCode::SUCCESS)
}

/// An opened suite, possibly generated into a temp dir that lives as long as it.
struct LoadedSuite {
    suite: Suite,
    _scratch: Option<tempfile::TempDir>,
}

impl SuiteArgs {
    fn load(&self, seed: u64) -> Result<LoadedSuite> {
        match &self.suite {
            Some(dir) => Ok(LoadedSuite {
                suite: Suite::open(dir)?,
                _scratch: None,
            }),
            None => {
                let scratch = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                log::warn!(
                    "no --suite given; evaluating a generated synthetic suite of {} questions",
                    self.synthetic
                );
                make_synthetic_suite_with(self.synthetic, seed, scratch.path(), &SyntheticOptions::default())?;
                Ok(LoadedSuite {
                    suite: Suite::open(scratch.path())?,
                    _scratch: Some(scratch),
                })
            }
        }
    }

    fn mask_source(&self, suite: &Suite, timeout: f64) -> Arc<dyn MaskSource> {
        match &self.masks_endpoint {
            Some(url) => Arc::new(RemoteMaskClient::new(url, Duration::from_secs_f64(timeout.max(0.001)))),
            None => Arc::new(suite.mask_dir()),
        }
    }

    fn records<'s>(&self, suite: &'s Suite) -> &'s [crate::dataset::QuestionRecord] {
        let all = suite.records();
        &all[..self.limit.unwrap_or(all.len()).min(all.len())]
    }
}

fn render(a: RenderArgs) -> Result<ExitCode> {
    let loaded = a.suite.load(a.seed)?;
    let suite = &loaded.suite;
    let clip = suite.clip(&a.clip)?;
    let strategy = a.cell.strategy.unwrap_or(StrategyFlags::SOM_GAZE);
    let indices: Vec<usize> = if a.cell.fps.is_some() {
        (0..clip.frame_count).collect()
    } else {
        let cfg = SamplingConfig::new(a.cell.lambda.unwrap_or(0.1), a.cell.n.unwrap_or(15), a.seed)?;
        draw_plan(clip.frame_count, &cfg)?.frame_indices
    };
    let frames = resolve_frames(&clip, &indices)?;
    let gaze = suite.gaze(&a.clip)?;
    let masks = if strategy.som {
        let last = frames.last().expect("non-empty plan");
        let source = a.suite.mask_source(suite, 120.0);
        Some(source.masks_for(&a.clip, *indices.last().expect("non-empty"), last)?)
    } else {
        None
    };
    let run = RunConfig::default();
    let cues = compose_cue_frames(&frames, &gaze, masks.as_ref(), strategy, &run.gaze, &run.som)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut written = Vec::new();
    for (k, (frame, index)) in cues.iter().zip(&indices).enumerate() {
        let path = a.out.join(format!("{k:03}_frame{index:06}.png"));
        frame.save_png(&path)?;
        written.push(path);
    }
    print_json(&json!({"clip": a.clip, "strategy": strategy, "indices": indices, "files": written}));
    Ok(ExitCode::SUCCESS)
}

fn prompt(a: PromptArgs) -> Result<ExitCode> {
    let loaded = a.suite.load(a.seed)?;
    let record = loaded
        .suite
        .record(&a.question)
        .ok_or_else(|| Error::Config(format!("no question {:?} in the suite", a.question)))?;
    println!("{}", build_prompt(record, a.strategy).text);
    Ok(ExitCode::SUCCESS)
}

/// Recursive object merge; `patch` wins on conflicts.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let value: Value = if is_toml {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    if !value.is_object() {
        return Err(Error::Config(format!("{}: expected a table/object at the top level", path.display())));
    }
    Ok(value)
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(c: &ConfigArgs, cell: &CellArgs) -> Result<RunConfig> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("config serializes");
    let mut mode_explicit = false;
    if let Some(path) = &c.config {
        let file = read_config_file(path)?;
        mode_explicit = file.get("mode").is_some();
        if let Some(kind) = file.pointer("/backend/kind") {
            // A different backend starts from that backend's defaults.
            if Some(kind) != value.pointer("/backend/kind") {
                value["backend"] = json!({});
            }
        }
        merge(&mut value, file);
    }

    let mut backend = Map::new();
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            backend.insert(key.into(), v);
        }
    };
    if let Some(kind) = &c.backend {
        let kind: BackendKind = kind.parse()?;
        set("kind", Some(json!(kind)));
        if value.pointer("/backend/kind") != Some(&json!(kind)) {
            value["backend"] = json!({});
        }
    }
    set("endpoint", c.endpoint.as_ref().map(|v| json!(v)));
    set("model_id", c.model.as_ref().map(|v| json!(v)));
    set("api_key_env", c.api_key_env.as_ref().map(|v| json!(v)));
    set("temperature", c.temperature.map(|v| json!(v)));
    set("timeout_secs", c.timeout.map(|v| json!(v)));
    set("max_retries", c.max_retries.map(|v| json!(v)));
    set("requests_per_minute", c.rpm.map(|v| json!(v)));
    set("mock_text", c.mock_text.as_ref().map(|v| json!(v)));
    set("mock_script_path", c.mock_script.as_ref().map(|v| json!(v)));
    set("encoder", c.encoder.as_ref().map(|v| json!(v)));
    set("seed", c.seed.map(|v| json!(v)));
    let mut patch = json!({"backend": backend});
    if let Some(s) = c.seed {
        patch["seed"] = json!(s);
    }
    if let Some(n) = c.concurrency {
        patch["concurrency"] = json!(n);
    }
    if let Some(d) = &c.cache_dir {
        patch["cache_dir"] = json!(d);
    }
    if let Some(d) = &c.work_dir {
        patch["work_dir"] = json!(d);
    }
    if let Some(s) = cell.strategy {
        patch["strategy"] = json!(s);
    }
    merge(&mut value, patch);

    let mut config: RunConfig =
        serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    if config.backend.kind.is_mock() && config.backend.model_id.is_empty() {
        config.backend.model_id = config.backend.kind.as_str().into();
    }

    if let Some(fps) = cell.fps {
        if cell.lambda.is_some() || cell.n.is_some() {
            return Err(Error::Config("--fps cannot be combined with --lambda or --n".into()));
        }
        config.mode = Mode::Video { fps };
    } else if cell.lambda.is_some() || cell.n.is_some() {
        let (lambda, n) = match config.mode {
            Mode::Frames { lambda, sample_size } => (lambda, sample_size),
            Mode::Video { .. } => (0.1, 15),
        };
        config.mode = Mode::Frames {
            lambda: cell.lambda.unwrap_or(lambda),
            sample_size: cell.n.unwrap_or(n),
        };
    } else if !mode_explicit && config.backend.kind == BackendKind::VideoFps {
        config.mode = Mode::Video {
            fps: config.backend.fps.unwrap_or(2.0),
        };
    }
    if config.backend.kind == BackendKind::VideoFps {
        if let Mode::Video { fps } = config.mode {
            config.backend.fps = Some(fps);
        }
    }
    config.validate()?;
    Ok(config)
}

struct Prepared {
    harness: Harness,
    trace: Option<Arc<TraceLog>>,
}

fn prepare(c: &ConfigArgs, config: &RunConfig, masks: Arc<dyn MaskSource>) -> Result<Prepared> {
    let trace = match &c.trace {
        Some(path) => Some(Arc::new(TraceLog::create(path, c.trace_bodies)?)),
        None => None,
    };
    let mut backend = Backend::new(config.backend.clone())?;
    if let Some(t) = &trace {
        backend = backend.with_trace(t.clone());
    }
    backend.check_environment()?;
    let mut harness = Harness::new(Arc::new(backend), masks);
    if let Some(dir) = &config.cache_dir {
        harness = harness.with_cache(ResponseCache::open(dir)?);
    }
    if let Some(t) = &trace {
        harness = harness.with_trace(t.clone());
    }
    Ok(Prepared { harness, trace })
}

fn write_report(report: &Report, output: &OutputArgs) -> Result<()> {
    match &output.out {
        Some(path) => {
            let format = output
                .format
                .or_else(|| ReportFormat::from_path(path))
                .unwrap_or(ReportFormat::Json);
            emit_report(report, format, path)
        }
        None => {
            let text = render_report(report, output.format.unwrap_or(ReportFormat::Markdown))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(report: &Report, output: &OutputArgs, trace: Option<Arc<TraceLog>>) -> Result<ExitCode> {
    write_report(report, output)?;
    if let Some(t) = trace {
        t.flush();
    }
    if report.metadata.degraded {
        eprintln!("warning: run degraded, over half of a cell's questions failed");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let config = resolve_config(&a.config, &a.cell)?;
    if a.config.dump_config {
        print_json(&config);
        return Ok(ExitCode::SUCCESS);
    }
    let loaded = a.suite.load(config.seed)?;
    let suite = &loaded.suite;
    let masks = a.suite.mask_source(suite, config.backend.timeout_secs);
    let p = prepare(&a.config, &config, masks)?;
    let records = a.suite.records(suite);
    let outcome = p.harness.evaluate_cell(suite, records, &config)?;
    if let Some(path) = &a.output.predictions {
        let mut lines = String::new();
        for pred in &outcome.predictions {
            lines.push_str(&serde_json::to_string(pred).expect("prediction serializes"));
            lines.push('\n');
        }
        std::fs::write(path, lines).map_err(|e| Error::io(path, e))?;
    }
    let started = chrono::Utc::now().to_rfc3339();
    let report = Report {
        metadata: RunMetadata {
            seed: config.seed,
            backend: p.harness.backend().identity(),
            artifact_version: crate::evaluator::ARTIFACT_VERSION.into(),
            started_at: started,
            finished_at: chrono::Utc::now().to_rfc3339(),
            degraded: outcome.cell.degraded(),
        },
        cells: vec![outcome.cell],
    };
    finish(&report, &a.output, p.trace)
}

fn grid_cells(a: &GridArgs, kind: BackendKind) -> Result<Vec<CellSpec>> {
    let custom = GridAxes {
        strategies: a.strategies.clone(),
        lambdas: a.lambdas.clone(),
        sample_sizes: a.sample_sizes.clone(),
        fps: a.fps_values.clone(),
    };
    match a.preset {
        Some(_) if custom != GridAxes::default() => {
            Err(Error::Config("--preset cannot be combined with explicit axes".into()))
        }
        Some(p) => p.cells(kind),
        None if custom == GridAxes::default() => Err(Error::Config("give --preset or grid axes".into())),
        None => {
            let cells = custom.cells()?;
            if let Some(bad) = cells.iter().find(|c| !c.mode.compatible_with(kind)) {
                return Err(Error::Config(format!("a {kind} backend cannot evaluate cell {bad:?}")));
            }
            Ok(cells)
        }
    }
}

fn grid(a: GridArgs) -> Result<ExitCode> {
    let mut base = resolve_config(&a.config, &CellArgs::default()).or_else(|e| match e {
        // The base mode is replaced per cell; only the rest must be valid here.
        Error::Config(ref m) if m.contains("cannot run in") => {
            let mut c = CellArgs::default();
            c.fps = Some(2.0);
            resolve_config(&a.config, &c)
        }
        e => Err(e),
    })?;
    let cells = grid_cells(&a, base.backend.kind)?;
    base = base.with_cell(cells[0]);
    if base.backend.kind == BackendKind::VideoFps {
        if let Mode::Video { fps } = base.mode {
            base.backend.fps = Some(fps);
        }
    }
    if a.config.dump_config {
        print_json(&json!({"base": base, "cells": cells}));
        return Ok(ExitCode::SUCCESS);
    }
    let loaded = a.suite.load(base.seed)?;
    let suite = &loaded.suite;
    let masks = a.suite.mask_source(suite, base.backend.timeout_secs);
    let p = prepare(&a.config, &base, masks)?;
    let report = p.harness.run_grid(suite, a.suite.records(suite), &cells, &base)?;
    finish(&report, &a.output, p.trace)
}

fn convert_report(a: ReportArgs) -> Result<ExitCode> {
    let report = match ReportFormat::from_path(&a.input) {
        Some(ReportFormat::Csv) => Report {
            metadata: RunMetadata {
                seed: 0,
                backend: "unknown (converted from csv)".into(),
                artifact_version: crate::evaluator::ARTIFACT_VERSION.into(),
                started_at: String::new(),
                finished_at: String::new(),
                degraded: false,
            },
            cells: read_report_csv(&a.input)?,
        },
        _ => read_report_json(&a.input)?,
    };
    let format = a
        .format
        .or_else(|| a.out.as_deref().and_then(ReportFormat::from_path))
        .unwrap_or(ReportFormat::Markdown);
    match &a.out {
        Some(path) => emit_report(&report, format, path)?,
        None => print!("{}", render_report(&report, format)?),
    }
    Ok(ExitCode::SUCCESS)
}
