//! Integer rasterization primitives shared by the overlays.
//!
//! Coverage tests are exact integer comparisons so that output is bit-identical
//! across platforms.

use crate::frame::{Frame, Rgb};

pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

fn clip_range(lo: i64, hi: i64, size: u32) -> Option<(u32, u32)> {
    let lo = lo.max(0);
    let hi = hi.min(size as i64 - 1);
    (lo <= hi).then_some((lo as u32, hi as u32))
}

/// Pixels whose squared distance to `center` is at most `radius²`.
pub fn circle_covers(center: (i64, i64), radius: u32, x: i64, y: i64) -> bool {
    let (dx, dy) = (x - center.0, y - center.1);
    let r = radius as i64;
    dx * dx + dy * dy <= r * r
}

/// Pixels within `width / 2` of the closed segment `a`–`b`.
pub fn segment_covers(a: (i64, i64), b: (i64, i64), width: u32, x: i64, y: i64) -> bool {
    let w2 = (width as i64) * (width as i64);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (px, py) = (x - a.0, y - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0 {
        return 4 * (px * px + py * py) <= w2;
    }
    let dot = px * dx + py * dy;
    if dot <= 0 {
        return 4 * (px * px + py * py) <= w2;
    }
    if dot >= len2 {
        let (qx, qy) = (x - b.0, y - b.1);
        return 4 * (qx * qx + qy * qy) <= w2;
    }
    let cross = (px * dy - py * dx) as i128;
    4 * cross * cross <= w2 as i128 * len2 as i128
}

pub fn fill_circle(frame: &mut Frame, center: (i64, i64), radius: u32, color: Rgb) {
    let r = radius as i64;
    let Some((x0, x1)) = clip_range(center.0 - r, center.0 + r, frame.width()) else {
        return;
    };
    let Some((y0, y1)) = clip_range(center.1 - r, center.1 + r, frame.height()) else {
        return;
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            if circle_covers(center, radius, x as i64, y as i64) {
                frame.put(x, y, color);
            }
        }
    }
}

pub fn fill_segment(frame: &mut Frame, a: (i64, i64), b: (i64, i64), width: u32, color: Rgb) {
    if width == 0 {
        return;
    }
    let pad = (width as i64 + 1) / 2;
    let Some((x0, x1)) = clip_range(a.0.min(b.0) - pad, a.0.max(b.0) + pad, frame.width()) else {
        return;
    };
    let Some((y0, y1)) = clip_range(a.1.min(b.1) - pad, a.1.max(b.1) + pad, frame.height()) else {
        return;
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            if segment_covers(a, b, width, x as i64, y as i64) {
                frame.put(x, y, color);
            }
        }
    }
}
