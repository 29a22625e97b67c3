//! C ABI over the hoicue pipeline.
//!
//! Conventions:
//! * Every fallible function returns a [`HoiStatus`]; results go through out
//!   pointers. On failure `hoi_last_error_message()` describes the error for
//!   the calling thread.
//! * Objects are opaque handles created by `*_new`/`*_load` functions and
//!   released with the matching `*_free`. Passing NULL to a `*_free` is a no-op.
//! * Strings returned through `char **` are owned by the caller and must be
//!   released with `hoi_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use hoicue::backends::Backend;
use hoicue::dataset::{load_gaze_track, QuestionRecord, Suite};
use hoicue::evaluator::{Harness, ResponseCache, RunConfig};
use hoicue::masks::{load_masks_indexed_image, load_masks_rle, parse_masks_rle, MaskSet};
use hoicue::prompting::{build_prompt, parse_answer, StrategyFlags};
use hoicue::sampler::{compute_weights, draw_plan, SamplingConfig};
use hoicue::visual::{apply_som_overlay, render_gaze_trail, GazeFixation, GazeOverlayConfig, GazeTrack, SomOverlayConfig};
use hoicue::{Error, Frame};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoiStatus {
    Ok = 0,
    /// A required pointer was NULL or a string was not UTF-8.
    InvalidArgument = 1,
    /// Parameter outside its domain or failed precondition.
    Domain = 2,
    Io = 3,
    /// Malformed input data.
    Format = 4,
    /// Inputs that disagree with each other, such as mask and frame sizes.
    Contract = 5,
    Config = 6,
    /// Inference backend failure.
    Backend = 7,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 8,
    /// Internal panic. The library state is still usable.
    Panic = 9,
}

impl From<&Error> for HoiStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::Degenerate(_) | Error::Precondition(_) | Error::Validation(_) => {
                HoiStatus::Domain
            }
            Error::Io { .. } => HoiStatus::Io,
            Error::Decode { .. } | Error::Format(_) | Error::Parse { .. } => HoiStatus::Format,
            Error::Contract(_) => HoiStatus::Contract,
            Error::Config(_) | Error::Environment { .. } => HoiStatus::Config,
            Error::Retryable { .. } | Error::Auth { .. } | Error::Rejected { .. } | Error::RetriesExhausted { .. } => {
                HoiStatus::Backend
            }
        }
    }
}

/// An RGB frame.
pub struct HoiFrame(Frame);

/// A gaze track: fixations in normalized coordinates, ordered by time.
pub struct HoiGazeTrack(GazeTrack);

/// Region masks of one frame.
pub struct HoiMaskSet(MaskSet);

/// Gaze trail drawing parameters. Colors are RGB.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HoiGazeConfig {
    pub window: usize,
    pub circle_radius: u32,
    pub line_width: u32,
    pub recent_color: [u8; 3],
    pub oldest_color: [u8; 3],
}

/// Set-of-mark drawing parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HoiSomConfig {
    pub fill_alpha: f64,
    pub palette_seed: u64,
    pub draw_contours: bool,
    pub contour_width: u32,
}

impl From<HoiGazeConfig> for GazeOverlayConfig {
    fn from(c: HoiGazeConfig) -> Self {
        GazeOverlayConfig {
            window: c.window,
            circle_radius: c.circle_radius,
            line_width: c.line_width,
            recent_color: c.recent_color,
            oldest_color: c.oldest_color,
        }
    }
}

impl From<HoiSomConfig> for SomOverlayConfig {
    fn from(c: HoiSomConfig) -> Self {
        SomOverlayConfig {
            fill_alpha: c.fill_alpha,
            palette_seed: c.palette_seed,
            draw_contours: c.draw_contours,
            contour_width: c.contour_width,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Status(HoiStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Outcome) -> HoiStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HoiStatus::Ok,
        Ok(Err(Failure::Status(status, message))) => {
            set_last_error(&message);
            status
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            HoiStatus::from(&e)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {message}"));
            HoiStatus::Panic
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::Status(HoiStatus::InvalidArgument, message.into())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(format!("{name} is NULL")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs removed").into_raw()
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn hoi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hoi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hoi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Selection probabilities of frames `0..sequence_length-1` (the final frame is
/// always kept and has no weight). Writes `sequence_length - 1` values.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hoi_compute_weights(
    sequence_length: usize,
    lambda: f64,
    out: *mut f64,
    out_len: usize,
) -> HoiStatus {
    guard(|| {
        let w = compute_weights(sequence_length, lambda)?;
        if out_len < w.len() {
            return Err(Failure::Status(
                HoiStatus::BufferTooSmall,
                format!("need room for {} weights, got {out_len}", w.len()),
            ));
        }
        if out.is_null() {
            return Err(invalid("out is NULL"));
        }
        std::slice::from_raw_parts_mut(out, w.len()).copy_from_slice(&w);
        Ok(())
    })
}

/// Draws a sorted frame index plan that always ends with the final frame.
/// `*out_len` receives the plan length, also when the buffer is too small.
///
/// # Safety
/// `out_indices` must point to `capacity` writable elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_draw_plan(
    sequence_length: usize,
    lambda: f64,
    sample_size: usize,
    seed: u64,
    out_indices: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> HoiStatus {
    guard(|| {
        let out_len = out_arg(out_len, "out_len")?;
        let plan = draw_plan(sequence_length, &SamplingConfig::new(lambda, sample_size, seed)?)?;
        *out_len = plan.frame_indices.len();
        if capacity < plan.frame_indices.len() {
            return Err(Failure::Status(
                HoiStatus::BufferTooSmall,
                format!("need room for {} indices, got {capacity}", plan.frame_indices.len()),
            ));
        }
        if out_indices.is_null() {
            return Err(invalid("out_indices is NULL"));
        }
        std::slice::from_raw_parts_mut(out_indices, plan.frame_indices.len()).copy_from_slice(&plan.frame_indices);
        Ok(())
    })
}

/// Creates a frame from packed RGB rows (`width * height * 3` bytes).
///
/// # Safety
/// `rgb` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_new(
    width: u32,
    height: u32,
    rgb: *const u8,
    len: usize,
    timestamp: f64,
    out: *mut *mut HoiFrame,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let pixels = slice_arg(rgb, len, "rgb")?.to_vec();
        *out = boxed(HoiFrame(Frame::new(width, height, pixels, timestamp)?));
        Ok(())
    })
}

/// Loads a PNG or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_load(path: *const c_char, timestamp: f64, out: *mut *mut HoiFrame) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        *out = boxed(HoiFrame(Frame::load(Path::new(path), timestamp)?));
        Ok(())
    })
}

/// # Safety
/// `frame` and `path` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_save_png(frame: *const HoiFrame, path: *const c_char) -> HoiStatus {
    guard(|| {
        let frame = ref_arg(frame, "frame")?;
        let path = str_arg(path, "path")?;
        frame.0.save_png(Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `frame` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_width(frame: *const HoiFrame) -> u32 {
    frame.as_ref().map_or(0, |f| f.0.width())
}

/// # Safety
/// `frame` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_height(frame: *const HoiFrame) -> u32 {
    frame.as_ref().map_or(0, |f| f.0.height())
}

/// Copies the packed RGB pixels into `buf`, which needs `width * height * 3` bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_copy_pixels(frame: *const HoiFrame, buf: *mut u8, len: usize) -> HoiStatus {
    guard(|| {
        let pixels = ref_arg(frame, "frame")?.0.pixels();
        if len < pixels.len() {
            return Err(Failure::Status(
                HoiStatus::BufferTooSmall,
                format!("need {} bytes, got {len}", pixels.len()),
            ));
        }
        if buf.is_null() {
            return Err(invalid("buf is NULL"));
        }
        std::slice::from_raw_parts_mut(buf, pixels.len()).copy_from_slice(pixels);
        Ok(())
    })
}

/// Hex SHA-256 of the raw pixel buffer, as a newly allocated string.
///
/// # Safety
/// `frame` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_digest(frame: *const HoiFrame, out: *mut *mut c_char) -> HoiStatus {
    guard(|| {
        let frame = ref_arg(frame, "frame")?;
        *out_arg(out, "out")? = into_c_string(frame.0.digest());
        Ok(())
    })
}

/// # Safety
/// `frame` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hoi_frame_free(frame: *mut HoiFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Builds a track from parallel arrays of timestamps (seconds) and normalized
/// coordinates. Fixations are sorted by time.
///
/// # Safety
/// The three arrays must each hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn hoi_gaze_track_new(
    clip_id: *const c_char,
    timestamps: *const f64,
    xs: *const f64,
    ys: *const f64,
    count: usize,
    out: *mut *mut HoiGazeTrack,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let clip_id = str_arg(clip_id, "clip_id")?;
        let ts = slice_arg(timestamps, count, "timestamps")?;
        let xs = slice_arg(xs, count, "xs")?;
        let ys = slice_arg(ys, count, "ys")?;
        let fixations = (0..count)
            .map(|i| GazeFixation {
                timestamp: ts[i],
                x: xs[i],
                y: ys[i],
            })
            .collect();
        *out = boxed(HoiGazeTrack(GazeTrack::new(clip_id, fixations)));
        Ok(())
    })
}

/// Loads a gaze CSV (`timestamp,x,y` with a header row).
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_gaze_track_load_csv(
    path: *const c_char,
    clip_id: *const c_char,
    out: *mut *mut HoiGazeTrack,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let clip_id = str_arg(clip_id, "clip_id")?;
        *out = boxed(HoiGazeTrack(load_gaze_track(Path::new(path), clip_id)?.track));
        Ok(())
    })
}

/// # Safety
/// `track` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_gaze_track_len(track: *const HoiGazeTrack) -> usize {
    track.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `track` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hoi_gaze_track_free(track: *mut HoiGazeTrack) {
    if !track.is_null() {
        drop(Box::from_raw(track));
    }
}

/// Parses an RLE mask document (`{"width","height","regions":[{"id","counts"}]}`).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_mask_set_from_json(json: *const c_char, out: *mut *mut HoiMaskSet) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let json = str_arg(json, "json")?;
        *out = boxed(HoiMaskSet(parse_masks_rle(json.as_bytes())?));
        Ok(())
    })
}

/// Loads masks from an RLE `.json` file or an indexed `.png` image.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hoi_mask_set_load(path: *const c_char, out: *mut *mut HoiMaskSet) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = Path::new(str_arg(path, "path")?);
        let masks = if path.extension().is_some_and(|e| e == "json") {
            load_masks_rle(path)?
        } else {
            load_masks_indexed_image(path)?
        };
        *out = boxed(HoiMaskSet(masks));
        Ok(())
    })
}

/// # Safety
/// `masks` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_mask_set_len(masks: *const HoiMaskSet) -> usize {
    masks.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `masks` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hoi_mask_set_free(masks: *mut HoiMaskSet) {
    if !masks.is_null() {
        drop(Box::from_raw(masks));
    }
}

/// Default gaze trail parameters.
#[no_mangle]
pub extern "C" fn hoi_gaze_config_default() -> HoiGazeConfig {
    let d = GazeOverlayConfig::default();
    HoiGazeConfig {
        window: d.window,
        circle_radius: d.circle_radius,
        line_width: d.line_width,
        recent_color: d.recent_color,
        oldest_color: d.oldest_color,
    }
}

/// Default set-of-mark parameters.
#[no_mangle]
pub extern "C" fn hoi_som_config_default() -> HoiSomConfig {
    let d = SomOverlayConfig::default();
    HoiSomConfig {
        fill_alpha: d.fill_alpha,
        palette_seed: d.palette_seed,
        draw_contours: d.draw_contours,
        contour_width: d.contour_width,
    }
}

/// Draws the gaze trail up to the frame's timestamp onto a copy of `frame`.
/// `config` may be NULL for the defaults.
///
/// # Safety
/// Handles must be valid; `out` receives a new frame handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_render_gaze_trail(
    frame: *const HoiFrame,
    track: *const HoiGazeTrack,
    config: *const HoiGazeConfig,
    out: *mut *mut HoiFrame,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let frame = ref_arg(frame, "frame")?;
        let track = ref_arg(track, "track")?;
        let cfg: GazeOverlayConfig = config.as_ref().map(|c| (*c).into()).unwrap_or_default();
        cfg.validate()?;
        *out = boxed(HoiFrame(render_gaze_trail(&frame.0, &track.0, &cfg)));
        Ok(())
    })
}

/// Blends region colors and contours onto a copy of `frame`. `config` may be
/// NULL for the defaults.
///
/// # Safety
/// Handles must be valid; `out` receives a new frame handle.
#[no_mangle]
pub unsafe extern "C" fn hoi_apply_som_overlay(
    frame: *const HoiFrame,
    masks: *const HoiMaskSet,
    config: *const HoiSomConfig,
    out: *mut *mut HoiFrame,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let frame = ref_arg(frame, "frame")?;
        let masks = ref_arg(masks, "masks")?;
        let cfg: SomOverlayConfig = config.as_ref().map(|c| (*c).into()).unwrap_or_default();
        *out = boxed(HoiFrame(apply_som_overlay(&frame.0, &masks.0, &cfg)?));
        Ok(())
    })
}

/// Builds the prompt for a question given as a manifest JSON line
/// (`id`, `clip_id`, `question`, `candidates`, `correct_index`).
/// `strategy` is one of `vllm_only`, `som`, `gaze`, `som_gaze`.
///
/// # Safety
/// Strings must be NUL-terminated; `out` receives a string to free with `hoi_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hoi_build_prompt(
    record_json: *const c_char,
    strategy: *const c_char,
    out: *mut *mut c_char,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let record: QuestionRecord = serde_json::from_str(str_arg(record_json, "record_json")?)
            .map_err(|e| Error::Format(format!("question record: {e}")))?;
        let problems = record.problems();
        if !problems.is_empty() {
            return Err(Error::Validation(problems).into());
        }
        let strategy: StrategyFlags = str_arg(strategy, "strategy")?.parse()?;
        *out = into_c_string(build_prompt(&record, strategy).text);
        Ok(())
    })
}

/// Maps model text to a candidate. `*out_index` is the chosen index, or -1
/// when no candidate matches.
///
/// # Safety
/// `candidates` must hold `count` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn hoi_parse_answer(
    raw_text: *const c_char,
    candidates: *const *const c_char,
    count: usize,
    out_index: *mut i64,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out_index, "out_index")?;
        let raw = str_arg(raw_text, "raw_text")?;
        let candidates = slice_arg(candidates, count, "candidates")?
            .iter()
            .map(|&c| str_arg(c, "candidate").map(String::from))
            .collect::<Result<Vec<_>, _>>()?;
        *out = parse_answer(raw, &candidates).index().map_or(-1, |i| i as i64);
        Ok(())
    })
}

/// Evaluates a suite directory under a run configuration given as JSON (the
/// shape printed by `hoicue run --dump-config`; omitted fields take their
/// defaults). Writes the report JSON to `*out_report`.
///
/// # Safety
/// Strings must be NUL-terminated; `out_report` receives a string to free with `hoi_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hoi_run_eval_json(
    suite_dir: *const c_char,
    config_json: *const c_char,
    out_report: *mut *mut c_char,
) -> HoiStatus {
    guard(|| {
        let out = out_arg(out_report, "out_report")?;
        let suite = Suite::open(str_arg(suite_dir, "suite_dir")?)?;
        let config: RunConfig = serde_json::from_str(str_arg(config_json, "config_json")?)
            .map_err(|e| Error::Config(format!("run configuration: {e}")))?;
        config.validate()?;
        let backend = Arc::new(Backend::new(config.backend.clone())?);
        let mut harness = Harness::new(backend, Arc::new(suite.mask_dir()));
        if let Some(dir) = &config.cache_dir {
            harness = harness.with_cache(ResponseCache::open(dir)?);
        }
        let report = harness.run_eval(&suite, suite.records(), &config)?;
        *out = into_c_string(serde_json::to_string(&report).expect("report serializes"));
        Ok(())
    })
}
