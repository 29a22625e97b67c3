//! Whole-video path for endpoints that cannot take an explicit frame list.
//!
//! Frames are uniformly decimated to the target rate, written as PNGs and
//! encoded by an external encoder:
//!
//! ```text
//! <encoder> -y -loglevel error -framerate <fps> -i <dir>/frame_%06d.png \
//!           -c:v libx264 -pix_fmt yuv420p <dir>/clip.mp4
//! ```
//!
//! The video is then uploaded (`POST <endpoint>/upload`, body `video/mp4`,
//! reply `{"file_uri": ..}`) and queried (`POST <endpoint>/generate` with
//! `{model, temperature, fps, prompt, file_uri}`, reply `{"text": ..}`).

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::Ordering;
use std::time::Instant;

use serde_json::{json, Value};

use super::transport::{check_status, HttpRequest};
use super::{Backend, BackendKind, InferenceResponse};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Evenly spaced indices that resample `frame_count` frames at `clip_fps` down
/// to `target_fps`. Returns every index when the target is not lower.
pub fn decimate_indices(frame_count: usize, clip_fps: f64, target_fps: f64) -> Vec<usize> {
    if frame_count == 0 {
        return Vec::new();
    }
    if target_fps >= clip_fps {
        return (0..frame_count).collect();
    }
    let duration = frame_count as f64 / clip_fps;
    let count = ((duration * target_fps + 1e-9).floor() as usize).max(1);
    let step = clip_fps / target_fps;
    (0..count)
        .map(|k| ((k as f64 * step).floor() as usize).min(frame_count - 1))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Encoder {
    program: String,
}

impl Encoder {
    pub fn new(program: impl Into<String>) -> Self {
        Self {
            program: program.into(),
        }
    }

    pub fn program(&self) -> &str {
        &self.program
    }

    pub fn check(&self) -> Result<()> {
        let status = Command::new(&self.program)
            .arg("-version")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
        match status {
            Ok(_) => Ok(()),
            Err(e) => Err(Error::Environment {
                message: format!("video encoder {:?} is not runnable: {e}", self.program),
                hint: "install ffmpeg or configure another encoder".into(),
            }),
        }
    }

    pub fn args(fps: f64, dir: &Path, output: &Path) -> Vec<String> {
        vec![
            "-y".into(),
            "-loglevel".into(),
            "error".into(),
            "-framerate".into(),
            format!("{fps}"),
            "-i".into(),
            dir.join("frame_%06d.png").display().to_string(),
            "-c:v".into(),
            "libx264".into(),
            "-pix_fmt".into(),
            "yuv420p".into(),
            output.display().to_string(),
        ]
    }

    /// Encodes `frames` at `fps` into `<dir>/clip.mp4` and returns its path.
    pub fn encode(&self, frames: &[Frame], fps: f64, dir: &Path) -> Result<PathBuf> {
        for (i, f) in frames.iter().enumerate() {
            f.save_png(&dir.join(format!("frame_{i:06}.png")))?;
        }
        let output = dir.join("clip.mp4");
        let result = Command::new(&self.program)
            .args(Self::args(fps, dir, &output))
            .stdin(Stdio::null())
            .output()
            .map_err(|e| Error::Environment {
                message: format!("could not run {:?}: {e}", self.program),
                hint: "install ffmpeg or configure another encoder".into(),
            })?;
        if !result.status.success() {
            return Err(Error::Environment {
                message: format!(
                    "{} exited with {}: {}",
                    self.program,
                    result.status,
                    String::from_utf8_lossy(&result.stderr).trim()
                ),
                hint: "check that the encoder supports libx264".into(),
            });
        }
        if !output.is_file() {
            return Err(Error::Environment {
                message: format!("{} produced no output file", self.program),
                hint: "check the encoder installation".into(),
            });
        }
        Ok(output)
    }
}

impl Backend {
    pub fn infer_video(
        &self,
        prompt: &str,
        cue_frames: &[Frame],
        clip_fps: f64,
        target_fps: f64,
        work_dir: &Path,
    ) -> Result<InferenceResponse> {
        if self.config.kind != BackendKind::VideoFps {
            return Err(Error::Config(format!("infer_video called on a {} backend", self.config.kind)));
        }
        if !(target_fps > 0.0 && clip_fps > 0.0) {
            return Err(Error::Precondition("frame rates must be positive".into()));
        }
        if cue_frames.is_empty() {
            return Err(Error::Precondition("no frames to encode".into()));
        }
        self.check_environment()?;
        let key = self.api_key()?;

        let keep = decimate_indices(cue_frames.len(), clip_fps, target_fps);
        let selected: Vec<Frame> = keep.iter().map(|&i| cue_frames[i].clone()).collect();
        std::fs::create_dir_all(work_dir).map_err(|e| Error::io(work_dir, e))?;
        let scratch = tempfile::Builder::new()
            .prefix("encode-")
            .tempdir_in(work_dir)
            .map_err(|e| Error::io(work_dir, e))?;
        let encoded_fps = target_fps.min(clip_fps);
        let video_path = Encoder::new(&self.config.encoder).encode(&selected, encoded_fps, scratch.path())?;
        let video = std::fs::read(&video_path).map_err(|e| Error::io(&video_path, e))?;

        self.calls.fetch_add(1, Ordering::SeqCst);
        let base = self.endpoint().trim_end_matches('/').to_string();
        let authorize = |mut r: HttpRequest| {
            if let Some(k) = &key {
                r = r.header("Authorization", format!("Bearer {k}"));
            }
            r
        };
        let start = Instant::now();
        let policy = self.config.retry_policy();

        let upload_url = format!("{base}/upload");
        let upload = authorize(
            HttpRequest::post(&upload_url, "video/mp4", video).header("X-Frame-Rate", format!("{encoded_fps}")),
        );
        let (file_uri, upload_attempts) = policy.run(
            |_| {
                self.limiter.acquire();
                let body = check_status(&upload_url, self.transport.post(&upload)?)?;
                let v: Value = serde_json::from_slice(&body)
                    .map_err(|e| Error::Format(format!("upload reply is not JSON: {e}")))?;
                v["file_uri"]
                    .as_str()
                    .map(String::from)
                    .ok_or_else(|| Error::Format("upload reply has no file_uri".into()))
            },
            |attempt, err, _| log::warn!("{upload_url}: attempt {attempt} failed ({err})"),
        )?;

        let generate_url = format!("{base}/generate");
        let body = json!({
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "fps": encoded_fps,
            "prompt": prompt,
            "file_uri": file_uri,
        });
        if self.trace.as_ref().is_some_and(|t| t.verbose()) {
            self.trace_event(
                "request",
                json!({"endpoint": generate_url, "body": body, "frames": selected.len()}),
            );
        }
        let generate = authorize(HttpRequest::post(
            &generate_url,
            "application/json",
            serde_json::to_vec(&body).expect("json"),
        ));
        let (text, generate_attempts) = policy.run(
            |_| {
                self.limiter.acquire();
                let body = check_status(&generate_url, self.transport.post(&generate)?)?;
                let v: Value = serde_json::from_slice(&body)
                    .map_err(|e| Error::Format(format!("generate reply is not JSON: {e}")))?;
                v["text"]
                    .as_str()
                    .map(String::from)
                    .ok_or_else(|| Error::Format("generate reply has no text".into()))
            },
            |attempt, err, _| log::warn!("{generate_url}: attempt {attempt} failed ({err})"),
        )?;
        Ok(InferenceResponse {
            text,
            latency_secs: start.elapsed().as_secs_f64(),
            attempt_count: upload_attempts.max(generate_attempts),
        })
    }
}
