//! Inference backends behind one interface.
//!
//! * `frame_list`: chat-completions style endpoint taking an ordered list of images.
//! * `video_fps`: endpoint that only accepts a whole video at a chosen frame rate;
//!   frames are decimated and encoded by an external encoder first.
//! * `mock_fixed`, `mock_random`, `mock_scripted`: deterministic, offline
//!   stand-ins for tests and harness checks.

pub mod frame_list;
pub mod mock;
pub mod ratelimit;
pub mod retry;
pub mod transport;
pub mod video;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::trace::TraceLog;

use ratelimit::RateLimiter;
use retry::RetryPolicy;
use transport::{Transport, UreqTransport};

pub use video::{decimate_indices, Encoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    FrameList,
    VideoFps,
    MockFixed,
    MockRandom,
    MockScripted,
}

impl BackendKind {
    pub fn is_mock(self) -> bool {
        !matches!(self, BackendKind::FrameList | BackendKind::VideoFps)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::FrameList => "frame_list",
            BackendKind::VideoFps => "video_fps",
            BackendKind::MockFixed => "mock_fixed",
            BackendKind::MockRandom => "mock_random",
            BackendKind::MockScripted => "mock_scripted",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| {
            Error::Config(format!(
                "unknown backend kind {s:?}; expected frame_list, video_fps, mock_fixed, mock_random or mock_scripted"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model_id: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// 0 disables rate limiting.
    pub requests_per_minute: u32,
    /// Target frame rate, `video_fps` only.
    pub fps: Option<f64>,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Seeds retry jitter and `mock_random` choices.
    pub seed: u64,
    /// Reply of `mock_fixed`.
    pub mock_text: Option<String>,
    /// Question id to reply, for `mock_scripted`.
    pub mock_script: Option<BTreeMap<String, String>>,
    /// JSON file with the script map; merged under `mock_script`.
    pub mock_script_path: Option<PathBuf>,
    /// Encoder program for `video_fps`.
    pub encoder: String,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::MockRandom,
            endpoint: None,
            model_id: String::new(),
            api_key_env: None,
            temperature: 0.0,
            timeout_secs: 120.0,
            max_retries: 3,
            requests_per_minute: 0,
            fps: None,
            backoff_base_ms: 1000,
            backoff_max_ms: 30_000,
            seed: 0,
            mock_text: None,
            mock_script: None,
            mock_script_path: None,
            encoder: "ffmpeg".into(),
        }
    }
}

impl BackendConfig {
    pub fn mock(kind: BackendKind) -> Self {
        Self {
            kind,
            model_id: kind.as_str().into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Config("timeout must be positive".into()));
        }
        match (self.kind, self.fps) {
            (BackendKind::VideoFps, None) => {
                return Err(Error::Config("video_fps backends need a target fps".into()))
            }
            (BackendKind::VideoFps, Some(fps)) if !(fps > 0.0 && fps.is_finite()) => {
                return Err(Error::Config(format!("fps must be positive, got {fps}")))
            }
            (BackendKind::VideoFps, Some(_)) => {}
            (kind, Some(_)) => {
                return Err(Error::Config(format!("fps is only valid for video_fps backends, not {kind}")))
            }
            _ => {}
        }
        if matches!(self.kind, BackendKind::FrameList | BackendKind::VideoFps) {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(Error::Config(format!("{} backend needs an endpoint", self.kind)));
            }
            if self.model_id.is_empty() {
                return Err(Error::Config(format!("{} backend needs a model_id", self.kind)));
            }
        }
        if self.kind == BackendKind::MockFixed && self.mock_text.is_none() {
            return Err(Error::Config("mock_fixed needs mock_text".into()));
        }
        if self.kind == BackendKind::MockScripted && self.mock_script.is_none() && self.mock_script_path.is_none() {
            return Err(Error::Config("mock_scripted needs mock_script or mock_script_path".into()));
        }
        Ok(())
    }

    /// Fields that change what a model would answer. Part of every cache key.
    pub fn identity(&self) -> String {
        let mut id = format!("{}|{}|{}", self.kind, self.endpoint.as_deref().unwrap_or(""), self.model_id);
        match self.kind {
            BackendKind::MockFixed => id.push_str(&format!("|{}", self.mock_text.as_deref().unwrap_or(""))),
            BackendKind::MockRandom => id.push_str(&format!("|seed={}", self.seed)),
            _ => {}
        }
        id
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base: Duration::from_millis(self.backoff_base_ms),
            max: Duration::from_millis(self.backoff_max_ms),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResponse {
    pub text: String,
    pub latency_secs: f64,
    pub attempt_count: u32,
}

/// What the mocks know about the question being answered.
#[derive(Debug, Clone, Copy)]
pub struct RecordContext<'a> {
    pub id: &'a str,
    pub candidates: &'a [String],
}

/// Visual input of one request.
#[derive(Debug, Clone, Copy)]
pub enum VisualInput<'a> {
    Frames(&'a [Frame]),
    /// Every clip frame, decimated to `target_fps` before encoding.
    Video {
        frames: &'a [Frame],
        clip_fps: f64,
        target_fps: f64,
    },
}

/// A configured backend, shareable across worker threads.
pub struct Backend {
    config: BackendConfig,
    transport: Arc<dyn Transport>,
    limiter: Arc<RateLimiter>,
    script: BTreeMap<String, String>,
    calls: AtomicU64,
    encoder_check: OnceLock<std::result::Result<(), String>>,
    trace: Option<Arc<TraceLog>>,
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backend")
            .field("config", &self.config)
            .field("calls", &self.calls.load(Ordering::Relaxed))
            .finish()
    }
}

impl Backend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        let transport = Arc::new(UreqTransport::new(Duration::from_secs_f64(config.timeout_secs.max(0.001))));
        Self::with_transport(config, transport)
    }

    pub fn with_transport(config: BackendConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        config.validate()?;
        let mut script = BTreeMap::new();
        if let Some(path) = &config.mock_script_path {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let loaded: BTreeMap<String, String> = serde_json::from_slice(&bytes)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            script.extend(loaded);
        }
        if let Some(inline) = &config.mock_script {
            script.extend(inline.clone());
        }
        Ok(Self {
            limiter: Arc::new(RateLimiter::per_minute(config.requests_per_minute)),
            config,
            transport,
            script,
            calls: AtomicU64::new(0),
            encoder_check: OnceLock::new(),
            trace: None,
        })
    }

    pub fn with_trace(mut self, trace: Arc<TraceLog>) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn limiter(&self) -> Arc<RateLimiter> {
        self.limiter.clone()
    }

    pub fn transport(&self) -> Arc<dyn Transport> {
        self.transport.clone()
    }

    /// Cache identity: the config identity plus, for scripted mocks, a digest of the script.
    pub fn identity(&self) -> String {
        let mut id = self.config.identity();
        if self.config.kind == BackendKind::MockScripted {
            use sha2::{Digest, Sha256};
            let json = serde_json::to_vec(&self.script).expect("string map serializes");
            id.push_str(&format!("|script={}", hex::encode(Sha256::digest(json))));
        }
        id
    }

    /// Number of inference calls served so far, across all kinds.
    pub fn invocations(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Startup check for external requirements. Only `video_fps` has any.
    pub fn check_environment(&self) -> Result<()> {
        if self.config.kind != BackendKind::VideoFps {
            return Ok(());
        }
        let outcome = self
            .encoder_check
            .get_or_init(|| Encoder::new(&self.config.encoder).check().map_err(|e| e.to_string()));
        outcome.clone().map_err(|message| Error::Environment {
            message,
            hint: format!(
                "install ffmpeg or point backend.encoder at an ffmpeg-compatible binary (currently {:?})",
                self.config.encoder
            ),
        })
    }

    fn api_key(&self) -> Result<Option<String>> {
        let Some(var) = &self.config.api_key_env else {
            return Ok(None);
        };
        match std::env::var(var) {
            Ok(v) if !v.is_empty() => Ok(Some(v)),
            _ => Err(Error::Config(format!("environment variable {var} holding the API key is not set"))),
        }
    }

    fn endpoint(&self) -> &str {
        self.config.endpoint.as_deref().unwrap_or_default()
    }

    fn trace_event(&self, kind: &str, fields: serde_json::Value) {
        if let Some(t) = &self.trace {
            t.event(kind, fields);
        }
    }

    /// Dispatches to the right path for this backend's kind. Mocks accept
    /// either visual input.
    pub fn infer(
        &self,
        prompt: &str,
        visual: VisualInput<'_>,
        record: RecordContext<'_>,
        work_dir: &Path,
    ) -> Result<InferenceResponse> {
        match (self.config.kind, visual) {
            (kind, _) if kind.is_mock() => self.mock_infer(prompt, record),
            (BackendKind::FrameList, VisualInput::Frames(frames)) => self.infer_frames(prompt, frames),
            (
                BackendKind::VideoFps,
                VisualInput::Video {
                    frames,
                    clip_fps,
                    target_fps,
                },
            ) => self.infer_video(prompt, frames, clip_fps, target_fps, work_dir),
            (kind, _) => Err(Error::Config(format!("{kind} backend cannot take this kind of visual input"))),
        }
    }
}
