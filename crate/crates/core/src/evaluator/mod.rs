//! End-to-end runs: per-question pipeline, accuracy aggregation, grids and
//! response caching.
//!
//! Each question goes through sample → compose cues → prompt → infer → parse.
//! Questions of one cell run concurrently on a bounded pool; grid cells run
//! one after another. Any per-question error is recorded on that question and
//! scored as incorrect, never aborting the run.

pub mod cache;
pub mod grid;
pub mod report;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::backends::{decimate_indices, Backend, BackendConfig, BackendKind, RecordContext, VisualInput};
use crate::dataset::{resolve_frames, ClipRef, QuestionRecord, Suite};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::masks::MaskSource;
use crate::prompting::{build_prompt, parse_answer, Answer, StrategyFlags};
use crate::sampler::{draw_plan, SamplingConfig};
use crate::trace::TraceLog;
use crate::visual::{compose_cue_frames, GazeOverlayConfig, GazeTrack, SomOverlayConfig};

pub use cache::{cache_key, ResponseCache};
pub use grid::{GridAxes, Preset};
pub use report::{
    emit_report, format_lambda, read_report_csv, read_report_json, render_report, Cell, CellKey, Report,
    ReportFormat, RunMetadata,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How frames reach the model: an explicit sampled list, or the whole clip
/// at a frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Frames { lambda: f64, sample_size: usize },
    Video { fps: f64 },
}

impl Mode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Mode::Frames { lambda, sample_size } => SamplingConfig::new(lambda, sample_size, 0).map(|_| ()),
            Mode::Video { fps } if fps.is_finite() && fps > 0.0 => Ok(()),
            Mode::Video { fps } => Err(Error::Domain(format!("fps must be positive, got {fps}"))),
        }
    }

    pub fn compatible_with(&self, kind: BackendKind) -> bool {
        match self {
            Mode::Frames { .. } => kind != BackendKind::VideoFps,
            Mode::Video { .. } => kind != BackendKind::FrameList,
        }
    }
}

/// One grid cell: a strategy and a sampling mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub strategy: StrategyFlags,
    pub mode: Mode,
}

impl CellSpec {
    pub fn key(&self) -> CellKey {
        match self.mode {
            Mode::Frames { lambda, sample_size } => CellKey {
                strategy: self.strategy,
                lambda: Some(lambda),
                sample_size: Some(sample_size),
                fps: None,
            },
            Mode::Video { fps } => CellKey {
                strategy: self.strategy,
                lambda: None,
                sample_size: None,
                fps: Some(fps),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: StrategyFlags,
    pub mode: Mode,
    pub backend: BackendConfig,
    pub seed: u64,
    /// Questions in flight at once.
    pub concurrency: usize,
    pub cache_dir: Option<PathBuf>,
    /// Scratch space for video encoding. Defaults to the system temp dir.
    pub work_dir: Option<PathBuf>,
    pub gaze: GazeOverlayConfig,
    pub som: SomOverlayConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyFlags::SOM_GAZE,
            mode: Mode::Frames {
                lambda: 0.1,
                sample_size: 15,
            },
            backend: BackendConfig::default(),
            seed: 0,
            concurrency: 4,
            cache_dir: None,
            work_dir: None,
            gaze: GazeOverlayConfig::default(),
            som: SomOverlayConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        self.backend.validate()?;
        self.gaze.validate()?;
        self.som.validate()?;
        if !self.mode.compatible_with(self.backend.kind) {
            return Err(Error::Config(format!(
                "a {} backend cannot run in {} mode",
                self.backend.kind,
                match self.mode {
                    Mode::Frames { .. } => "frame sampling",
                    Mode::Video { .. } => "video fps",
                }
            )));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cell(&self) -> CellSpec {
        CellSpec {
            strategy: self.strategy,
            mode: self.mode,
        }
    }

    pub fn with_cell(&self, cell: CellSpec) -> RunConfig {
        RunConfig {
            strategy: cell.strategy,
            mode: cell.mode,
            ..self.clone()
        }
    }
}

/// Sampling seed of one question: the first 8 bytes of SHA-256(seed ‖ id).
pub fn question_seed(run_seed: u64, question_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(question_id.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub answer: Answer,
    pub raw_text: String,
    pub correct: bool,
    pub cache_hit: bool,
    pub latency_secs: f64,
    pub attempt_count: u32,
    /// Set when the question failed before producing model text.
    pub failure: Option<String>,
}

impl Prediction {
    fn failed(question_id: &str, err: &Error) -> Self {
        Self {
            question_id: question_id.to_string(),
            answer: Answer::Abstain,
            raw_text: String::new(),
            correct: false,
            cache_hit: false,
            latency_secs: 0.0,
            attempt_count: 0,
            failure: Some(format!("{}: {err}", err.kind())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub predictions: Vec<Prediction>,
}

/// Shared state of a run: backend, mask source, response cache and trace.
pub struct Harness {
    backend: Arc<Backend>,
    masks: Arc<dyn MaskSource>,
    cache: Option<ResponseCache>,
    trace: Option<Arc<TraceLog>>,
}

impl Harness {
    pub fn new(backend: Arc<Backend>, masks: Arc<dyn MaskSource>) -> Self {
        Self {
            backend,
            masks,
            cache: None,
            trace: None,
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_trace(mut self, trace: Arc<TraceLog>) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    fn event(&self, kind: &str, fields: serde_json::Value) {
        if let Some(t) = &self.trace {
            t.event(kind, fields);
        }
    }

    /// Runs one question. Errors become a failed prediction.
    pub fn run_question(
        &self,
        record: &QuestionRecord,
        clip: &ClipRef,
        gaze: &GazeTrack,
        config: &RunConfig,
    ) -> Prediction {
        self.event("question_started", json!({"question": record.id, "clip": clip.clip_id}));
        let prediction = self
            .try_question(record, clip, gaze, config)
            .unwrap_or_else(|e| Prediction::failed(&record.id, &e));
        self.event(
            "question_finished",
            json!({
                "question": record.id,
                "answer": prediction.answer,
                "correct": prediction.correct,
                "cache_hit": prediction.cache_hit,
                "failure": prediction.failure,
            }),
        );
        prediction
    }

    fn try_question(
        &self,
        record: &QuestionRecord,
        clip: &ClipRef,
        gaze: &GazeTrack,
        config: &RunConfig,
    ) -> Result<Prediction> {
        let problems = record.problems();
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let indices: Vec<usize> = match config.mode {
            Mode::Frames { lambda, sample_size } => {
                let sampling = SamplingConfig::new(lambda, sample_size, question_seed(config.seed, &record.id))?;
                draw_plan(clip.frame_count, &sampling)?.frame_indices
            }
            Mode::Video { .. } => (0..clip.frame_count).collect(),
        };
        let frames = resolve_frames(clip, &indices)?;
        let last = frames.last().expect("plans are never empty");
        let masks = if config.strategy.som {
            Some(self.masks.masks_for(&clip.clip_id, *indices.last().expect("non-empty"), last)?)
        } else {
            None
        };
        let cues = compose_cue_frames(&frames, gaze, masks.as_ref(), config.strategy, &config.gaze, &config.som)?;
        let prompt = build_prompt(record, config.strategy);

        let (sent, decoding): (Vec<&Frame>, String) = match config.mode {
            Mode::Frames { .. } => (
                cues.iter().collect(),
                format!("temperature={};mode=frames", self.backend.config().temperature),
            ),
            Mode::Video { fps } => (
                decimate_indices(cues.len(), clip.fps, fps)
                    .into_iter()
                    .map(|i| &cues[i])
                    .collect(),
                format!(
                    "temperature={};mode=video;fps={}",
                    self.backend.config().temperature,
                    fps.min(clip.fps)
                ),
            ),
        };
        let digests: Vec<String> = sent.iter().map(|f| f.digest()).collect();
        let key = cache_key(record, &prompt.text, &digests, &self.backend.identity(), &decoding);

        let cached = self.cache.as_ref().and_then(|c| c.get(&key));
        let cache_hit = cached.is_some();
        let response = match cached {
            Some(r) => {
                self.event("cache_hit", json!({"question": record.id, "key": key}));
                r
            }
            None => {
                let visual = match config.mode {
                    Mode::Frames { .. } => VisualInput::Frames(&cues),
                    Mode::Video { fps } => VisualInput::Video {
                        frames: &cues,
                        clip_fps: clip.fps,
                        target_fps: fps,
                    },
                };
                let work_dir = config.work_dir.clone().unwrap_or_else(std::env::temp_dir);
                let context = RecordContext {
                    id: &record.id,
                    candidates: &prompt.candidate_order,
                };
                let r = self.backend.infer(&prompt.text, visual, context, &work_dir)?;
                if let Some(c) = &self.cache {
                    c.put(&key, &r)?;
                }
                r
            }
        };
        let answer = parse_answer(&response.text, &record.candidates);
        Ok(Prediction {
            question_id: record.id.clone(),
            answer,
            correct: answer.index() == Some(record.correct_index),
            raw_text: response.text,
            cache_hit,
            latency_secs: response.latency_secs,
            attempt_count: response.attempt_count,
            failure: None,
        })
    }

    /// Evaluates every record under one configuration. Predictions come back
    /// in record order whatever the worker scheduling.
    pub fn evaluate_cell(&self, suite: &Suite, records: &[QuestionRecord], config: &RunConfig) -> Result<CellOutcome> {
        config.validate()?;
        if records.is_empty() {
            return Err(Error::Precondition("no questions to evaluate".into()));
        }
        self.backend.check_environment()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.concurrency)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        let predictions: Vec<Prediction> = pool.install(|| {
            records
                .par_iter()
                .map(|record| {
                    let inputs = suite.clip(&record.clip_id).and_then(|clip| {
                        let gaze = if config.strategy.gaze {
                            suite.gaze(&record.clip_id)?
                        } else {
                            GazeTrack::empty(&record.clip_id)
                        };
                        Ok((clip, gaze))
                    });
                    match inputs {
                        Ok((clip, gaze)) => self.run_question(record, &clip, &gaze, config),
                        Err(e) => Prediction::failed(&record.id, &e),
                    }
                })
                .collect()
        });
        let correct = predictions.iter().filter(|p| p.correct).count();
        let failures = predictions.iter().filter(|p| p.failure.is_some()).count();
        let abstains = predictions
            .iter()
            .filter(|p| p.failure.is_none() && p.answer == Answer::Abstain)
            .count();
        let cell = Cell::new(config.cell().key(), correct, predictions.len(), abstains, failures);
        if cell.degraded() {
            log::warn!(
                "{} of {} questions failed in cell {:?}",
                failures,
                predictions.len(),
                cell.key
            );
        }
        Ok(CellOutcome { cell, predictions })
    }

    pub fn run_eval(&self, suite: &Suite, records: &[QuestionRecord], config: &RunConfig) -> Result<Report> {
        let started = now();
        let outcome = self.evaluate_cell(suite, records, config)?;
        Ok(self.report(config.seed, started, vec![outcome.cell]))
    }

    /// Evaluates each cell in turn on top of `base`.
    pub fn run_grid(
        &self,
        suite: &Suite,
        records: &[QuestionRecord],
        cells: &[CellSpec],
        base: &RunConfig,
    ) -> Result<Report> {
        if cells.is_empty() {
            return Err(Error::Precondition("grid has no cells".into()));
        }
        let started = now();
        let mut out = Vec::with_capacity(cells.len());
        for (i, spec) in cells.iter().enumerate() {
            log::info!("cell {}/{}: {:?}", i + 1, cells.len(), spec);
            out.push(self.evaluate_cell(suite, records, &base.with_cell(*spec))?.cell);
        }
        Ok(self.report(base.seed, started, out))
    }

    fn report(&self, seed: u64, started_at: String, cells: Vec<Cell>) -> Report {
        if let Some(t) = &self.trace {
            t.flush();
        }
        Report {
            metadata: RunMetadata {
                seed,
                backend: self.backend.identity(),
                artifact_version: ARTIFACT_VERSION.into(),
                started_at,
                finished_at: now(),
                degraded: cells.iter().any(Cell::degraded),
            },
            cells,
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::mock::oracle_script;
    use crate::dataset::{make_synthetic_suite_with, SyntheticOptions};
    use crate::masks::MaskSet;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct CountingMasks {
        inner: crate::masks::MaskDir,
        calls: AtomicUsize,
    }

    impl MaskSource for CountingMasks {
        fn masks_for(&self, clip_id: &str, index: usize, frame: &Frame) -> Result<MaskSet> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.masks_for(clip_id, index, frame)
        }
    }

    fn suite(count: usize) -> (tempfile::TempDir, Suite) {
        let dir = tempfile::tempdir().unwrap();
        let opts = SyntheticOptions {
            width: 32,
            height: 32,
            ..Default::default()
        };
        make_synthetic_suite_with(count, 3, dir.path(), &opts).unwrap();
        let suite = Suite::open(dir.path()).unwrap();
        (dir, suite)
    }

    fn harness(config: BackendConfig, suite: &Suite) -> (Harness, Arc<CountingMasks>) {
        let masks = Arc::new(CountingMasks {
            inner: suite.mask_dir(),
            calls: AtomicUsize::new(0),
        });
        (Harness::new(Arc::new(Backend::new(config).unwrap()), masks.clone()), masks)
    }

    #[test]
    fn oracle_scores_everything() {
        let (_d, suite) = suite(12);
        let backend = BackendConfig {
            mock_script: Some(oracle_script(suite.records())),
            ..BackendConfig::mock(BackendKind::MockScripted)
        };
        let (h, masks) = harness(backend.clone(), &suite);
        let config = RunConfig {
            backend,
            ..Default::default()
        };
        let r = h.run_eval(&suite, suite.records(), &config).unwrap();
        assert_eq!(r.cells[0].accuracy, 1.0);
        assert_eq!(masks.calls.load(Ordering::SeqCst), 12);
    }

    #[test]
    fn masks_only_fetched_for_som() {
        let (_d, suite) = suite(6);
        let backend = BackendConfig::mock(BackendKind::MockRandom);
        let (h, masks) = harness(backend.clone(), &suite);
        for strategy in [StrategyFlags::VLLM_ONLY, StrategyFlags::GAZE] {
            let config = RunConfig {
                strategy,
                backend: backend.clone(),
                ..Default::default()
            };
            h.run_eval(&suite, suite.records(), &config).unwrap();
        }
        assert_eq!(masks.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let (dir, suite) = suite(4);
        std::fs::remove_dir_all(dir.path().join("clips").join("clip00001")).unwrap();
        let backend = BackendConfig::mock(BackendKind::MockRandom);
        let (h, _) = harness(backend.clone(), &suite);
        let config = RunConfig {
            backend,
            ..Default::default()
        };
        let out = h.evaluate_cell(&suite, suite.records(), &config).unwrap();
        assert_eq!(out.cell.failure_count, 1);
        assert_eq!(out.cell.total, 4);
        assert!(out.predictions[1].failure.is_some());
        assert!(!out.predictions[1].correct);
        assert!(!out.cell.degraded());
    }

    #[test]
    fn warm_cache_skips_backend() {
        let (d, suite) = suite(8);
        let backend = BackendConfig::mock(BackendKind::MockRandom);
        let config = RunConfig {
            backend: backend.clone(),
            ..Default::default()
        };
        let cache = ResponseCache::open(d.path().join("cache")).unwrap();
        let (cold, _) = harness(backend.clone(), &suite);
        let cold = cold.with_cache(cache.clone());
        let a = cold.run_eval(&suite, suite.records(), &config).unwrap();
        let (warm, _) = harness(backend, &suite);
        let warm = warm.with_cache(cache);
        let out = warm.evaluate_cell(&suite, suite.records(), &config).unwrap();
        assert_eq!(warm.backend().invocations(), 0);
        assert!(out.predictions.iter().all(|p| p.cache_hit));
        let b = warm.run_eval(&suite, suite.records(), &config).unwrap();
        assert!(a.same_results(&b));
    }

    #[test]
    fn mode_must_match_backend() {
        let config = RunConfig {
            mode: Mode::Video { fps: 2.0 },
            backend: BackendConfig {
                kind: BackendKind::FrameList,
                endpoint: Some("http://x".into()),
                model_id: "m".into(),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(config.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn question_seeds_split_by_id() {
        assert_eq!(question_seed(1, "q1"), question_seed(1, "q1"));
        assert_ne!(question_seed(1, "q1"), question_seed(1, "q2"));
        assert_ne!(question_seed(1, "q1"), question_seed(2, "q1"));
    }
}
