//! Visual cues drawn onto sampled frames: the gaze trail on every frame and
//! the segmentation overlay on the final frame.

pub mod gaze;
pub mod raster;
pub mod som;

pub use gaze::{render_gaze_trail, select_window, trail_color, GazeFixation, GazeOverlayConfig, GazeTrack};
pub use som::{apply_som_overlay, region_color, SomOverlayConfig};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::masks::MaskSet;
use crate::prompting::StrategyFlags;

/// Applies the cues selected by `strategy` to an ordered frame list.
///
/// The gaze trail goes on every frame. Masks go on the last frame only, after
/// its trail, so both remain visible.
pub fn compose_cue_frames(
    frames: &[Frame],
    track: &GazeTrack,
    final_masks: Option<&MaskSet>,
    strategy: StrategyFlags,
    gaze_cfg: &GazeOverlayConfig,
    som_cfg: &SomOverlayConfig,
) -> Result<Vec<Frame>> {
    if frames.is_empty() {
        return Err(Error::Precondition("no frames to compose".into()));
    }
    if frames.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::Precondition("frames must be in ascending time order".into()));
    }
    gaze_cfg.validate()?;
    let masks = match (strategy.som, final_masks) {
        (true, None) => {
            return Err(Error::Precondition(
                "set-of-mark overlay requested but no masks were supplied".into(),
            ))
        }
        (true, Some(m)) => Some(m),
        (false, _) => None,
    };

    let mut out: Vec<Frame> = if strategy.gaze {
        frames
            .iter()
            .map(|f| render_gaze_trail(f, track, gaze_cfg))
            .collect()
    } else {
        frames.to_vec()
    };
    if let Some(masks) = masks {
        let last = out.len() - 1;
        out[last] = apply_som_overlay(&out[last], masks, som_cfg)?;
    }
    Ok(out)
}
