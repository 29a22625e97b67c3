use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Rgb};

use super::raster::{fill_circle, fill_segment, round_half_up};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeFixation {
    pub timestamp: f64,
    /// Normalized horizontal position, 0 = left edge.
    pub x: f64,
    /// Normalized vertical position, 0 = top edge.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GazeTrack {
    pub clip_id: String,
    fixations: Vec<GazeFixation>,
}

impl GazeTrack {
    /// Sorts fixations by timestamp; equal timestamps keep their input order.
    pub fn new(clip_id: impl Into<String>, mut fixations: Vec<GazeFixation>) -> Self {
        fixations.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self {
            clip_id: clip_id.into(),
            fixations,
        }
    }

    pub fn empty(clip_id: impl Into<String>) -> Self {
        Self::new(clip_id, Vec::new())
    }

    pub fn fixations(&self) -> &[GazeFixation] {
        &self.fixations
    }

    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeOverlayConfig {
    pub window: usize,
    pub circle_radius: u32,
    pub line_width: u32,
    pub recent_color: Rgb,
    pub oldest_color: Rgb,
}

impl Default for GazeOverlayConfig {
    fn default() -> Self {
        Self {
            window: 15,
            circle_radius: 8,
            line_width: 3,
            recent_color: [255, 0, 0],
            oldest_color: [0, 0, 255],
        }
    }
}

impl GazeOverlayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Domain("gaze window must be at least 1".into()));
        }
        Ok(())
    }
}

/// The most recent `window` fixations at or before `t`, oldest first.
pub fn select_window(track: &GazeTrack, t: f64, window: usize) -> &[GazeFixation] {
    let fixations = track.fixations();
    let end = fixations.partition_point(|f| f.timestamp <= t);
    &fixations[end.saturating_sub(window)..end]
}

/// Trail color for the fixation of age rank `k` (0 = most recent) out of `count`.
///
/// Linear per-channel interpolation in integer arithmetic, rounding half up.
pub fn trail_color(k: usize, count: usize, config: &GazeOverlayConfig) -> Rgb {
    if count <= 1 {
        return config.recent_color;
    }
    let k = k.min(count - 1) as u64;
    let span = (count - 1) as u64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let recent = config.recent_color[c] as u64;
        let oldest = config.oldest_color[c] as u64;
        let num = recent * (span - k) + oldest * k;
        out[c] = ((2 * num + span) / (2 * span)) as u8;
    }
    out
}

/// Pixel position of a normalized fixation.
pub fn fixation_to_pixel(fixation: &GazeFixation, width: u32, height: u32) -> (i64, i64) {
    let x = round_half_up(fixation.x.clamp(0.0, 1.0) * (width.saturating_sub(1)) as f64);
    let y = round_half_up(fixation.y.clamp(0.0, 1.0) * (height.saturating_sub(1)) as f64);
    (x, y)
}

/// Draws the gaze trail visible at `frame.timestamp`.
///
/// Segments go first, each colored like its older endpoint, then circles from
/// oldest to newest so the most recent fixation ends up on top.
pub fn render_gaze_trail(frame: &Frame, track: &GazeTrack, config: &GazeOverlayConfig) -> Frame {
    let window = select_window(track, frame.timestamp, config.window.max(1));
    let mut out = frame.clone();
    if window.is_empty() {
        return out;
    }
    let count = window.len();
    let points: Vec<(i64, i64)> = window
        .iter()
        .map(|f| fixation_to_pixel(f, frame.width(), frame.height()))
        .collect();
    // window[j] has age rank count - 1 - j.
    let color_of = |j: usize| trail_color(count - 1 - j, count, config);

    for j in 0..count.saturating_sub(1) {
        fill_segment(&mut out, points[j], points[j + 1], config.line_width, color_of(j));
    }
    for (j, &p) in points.iter().enumerate() {
        fill_circle(&mut out, p, config.circle_radius, color_of(j));
    }
    out
}
