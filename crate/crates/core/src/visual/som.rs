use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Rgb};
use crate::masks::MaskSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SomOverlayConfig {
    /// Blend factor of the region color over the source pixel.
    pub fill_alpha: f64,
    pub palette_seed: u64,
    pub draw_contours: bool,
    pub contour_width: u32,
}

impl Default for SomOverlayConfig {
    fn default() -> Self {
        Self {
            fill_alpha: 0.05,
            palette_seed: 0,
            draw_contours: true,
            contour_width: 2,
        }
    }
}

impl SomOverlayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fill_alpha) {
            return Err(Error::Domain(format!(
                "fill alpha must lie in [0, 1], got {}",
                self.fill_alpha
            )));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fully saturated color picked from a 360-step hue wheel by hashing
/// `(palette_seed, region_id)`.
pub fn region_color(palette_seed: u64, region_id: u32) -> Rgb {
    let hue = (splitmix64(palette_seed ^ splitmix64(region_id as u64)) % 360) as u32;
    let f = hue % 60;
    let rising = ((255 * f * 2 + 60) / 120) as u8;
    let falling = 255 - rising;
    match hue / 60 {
        0 => [255, rising, 0],
        1 => [falling, 255, 0],
        2 => [0, 255, rising],
        3 => [0, falling, 255],
        4 => [rising, 0, 255],
        _ => [255, 0, falling],
    }
}

#[inline]
fn blend(src: Rgb, color: Rgb, alpha: f64) -> Rgb {
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = (1.0 - alpha) * src[c] as f64 + alpha * color[c] as f64;
        out[c] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Inner band of the region: mask pixels within Chebyshev distance `width` of a
/// pixel outside the mask. Pixels beyond the frame edge count as inside.
pub fn contour_band(mask: &[bool], width: u32, height: u32, band: u32) -> Vec<bool> {
    let (w, h) = (width as i64, height as i64);
    let mut interior = mask.to_vec();
    for _ in 0..band {
        let prev = interior.clone();
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if !prev[i] {
                    continue;
                }
                'scan: for ny in (y - 1).max(0)..=(y + 1).min(h - 1) {
                    for nx in (x - 1).max(0)..=(x + 1).min(w - 1) {
                        if !prev[(ny * w + nx) as usize] {
                            interior[i] = false;
                            break 'scan;
                        }
                    }
                }
            }
        }
    }
    mask.iter().zip(&interior).map(|(&m, &inner)| m && !inner).collect()
}

/// Tints every region of `masks` over `frame`, then outlines them.
///
/// Fills are composited in ascending region id, then contours in the same
/// order, each in the region's color at full opacity. No labels are drawn.
pub fn apply_som_overlay(frame: &Frame, masks: &MaskSet, config: &SomOverlayConfig) -> Result<Frame> {
    config.validate()?;
    if masks.width() != frame.width() || masks.height() != frame.height() {
        let id = masks.regions().first().map(|r| r.region_id());
        return Err(Error::Contract(match id {
            Some(id) => format!(
                "region {id} is {}x{} but the frame is {}x{}",
                masks.width(),
                masks.height(),
                frame.width(),
                frame.height()
            ),
            None => format!(
                "mask set is {}x{} but the frame is {}x{}",
                masks.width(),
                masks.height(),
                frame.width(),
                frame.height()
            ),
        }));
    }
    let mut out = frame.clone();
    let width = frame.width();
    let bitmaps: Vec<(Rgb, Vec<bool>)> = masks
        .regions()
        .iter()
        .map(|r| (region_color(config.palette_seed, r.region_id()), r.to_bitmap()))
        .collect();

    if config.fill_alpha > 0.0 {
        for (color, bitmap) in &bitmaps {
            for (i, _) in bitmap.iter().enumerate().filter(|(_, &b)| b) {
                let (x, y) = (i as u32 % width, i as u32 / width);
                let blended = blend(out.get(x, y), *color, config.fill_alpha);
                out.put(x, y, blended);
            }
        }
    }
    if config.draw_contours && config.contour_width > 0 {
        for (color, bitmap) in &bitmaps {
            let band = contour_band(bitmap, width, frame.height(), config.contour_width);
            for (i, _) in band.iter().enumerate().filter(|(_, &b)| b) {
                out.put(i as u32 % width, i as u32 / width, *color);
            }
        }
    }
    Ok(out)
}
