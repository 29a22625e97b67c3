//! Benchmark ingestion and synthetic fixture generation.
//!
//! On-disk layout of a suite:
//!
//! ```text
//! <root>/manifest.jsonl             one question record per line
//! <root>/clips/<clip_id>/meta.json  {"fps": .., "frame_count": ..}
//! <root>/clips/<clip_id>/frames/    000000.png, 000001.png, ... (or .jpg)
//! <root>/gaze/<clip_id>.csv         timestamp,x,y
//! <root>/masks/<clip_id>.json       RLE masks for the final frame
//! ```

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Rgb};
use crate::masks::{MaskDir, MaskSet, RegionMask};
use crate::prompting::{normalize, BASE_QUESTION};
use crate::visual::{GazeFixation, GazeTrack};

pub const CANDIDATE_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub clip_id: String,
    #[serde(rename = "question")]
    pub question_text: String,
    pub candidates: Vec<String>,
    pub correct_index: usize,
}

impl QuestionRecord {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.candidates.len() != CANDIDATE_COUNT {
            out.push(format!(
                "expected {CANDIDATE_COUNT} candidates, found {}",
                self.candidates.len()
            ));
        }
        if self.correct_index >= self.candidates.len().max(CANDIDATE_COUNT) {
            out.push(format!("correct_index {} out of range", self.correct_index));
        }
        let mut seen = HashSet::new();
        for c in &self.candidates {
            if !seen.insert(normalize(c)) {
                out.push(format!("candidate {c:?} duplicates another after normalization"));
            }
        }
        if self.id.is_empty() {
            out.push("empty id".into());
        }
        out
    }

    pub fn correct_answer(&self) -> &str {
        &self.candidates[self.correct_index]
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<QuestionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut ids: HashSet<String> = HashSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QuestionRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("line {lineno}: {e}"));
                continue;
            }
        };
        for p in record.problems() {
            errors.push(format!("line {lineno}: {p}"));
        }
        if !ids.insert(record.id.clone()) {
            errors.push(format!("line {lineno}: duplicate id {:?}", record.id));
        }
        records.push(record);
    }
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[QuestionRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("plain data serializes");
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazeLoad {
    pub track: GazeTrack,
    /// Rows whose coordinates were clamped into [0, 1].
    pub clamped: usize,
}

/// Reads a `timestamp,x,y` CSV. Rows are sorted by time (stable) and
/// coordinates are clamped into the frame.
pub fn load_gaze_track(path: &Path, clip_id: &str) -> Result<GazeLoad> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_gaze_csv(file, clip_id)
}

pub fn parse_gaze_csv(reader: impl std::io::Read, clip_id: &str) -> Result<GazeLoad> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (ti, xi, yi) = (column("timestamp")?, column("x")?, column("y")?);
    let mut fixations = Vec::new();
    let mut clamped = 0;
    for (n, row) in csv.records().enumerate() {
        // Header is row 1.
        let rowno = n + 2;
        let row = row.map_err(|e| Error::Parse {
            row: rowno,
            message: e.to_string(),
        })?;
        let cell = |i: usize, name: &str| -> Result<f64> {
            let raw = row.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: rowno,
                    message: format!("{name} is not a number: {raw:?}"),
                })
        };
        let timestamp = cell(ti, "timestamp")?;
        if timestamp < 0.0 {
            return Err(Error::Parse {
                row: rowno,
                message: format!("negative timestamp {timestamp}"),
            });
        }
        let (x, y) = (cell(xi, "x")?, cell(yi, "y")?);
        let (cx, cy) = (x.clamp(0.0, 1.0), y.clamp(0.0, 1.0));
        if cx != x || cy != y {
            clamped += 1;
        }
        fixations.push(GazeFixation {
            timestamp,
            x: cx,
            y: cy,
        });
    }
    if clamped > 0 {
        log::warn!("{clip_id}: clamped {clamped} gaze rows into the frame");
    }
    Ok(GazeLoad {
        track: GazeTrack::new(clip_id, fixations),
        clamped,
    })
}

pub fn write_gaze_csv(path: &Path, track: &GazeTrack) -> Result<()> {
    let mut out = String::from("timestamp,x,y\n");
    for f in track.fixations() {
        out.push_str(&format!("{:.4},{:.4},{:.4}\n", f.timestamp, f.x, f.y));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub fps: f64,
    pub frame_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipRef {
    pub clip_id: String,
    pub frames_dir: PathBuf,
    pub fps: f64,
    pub frame_count: usize,
}

const FRAME_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

impl ClipRef {
    pub fn new(clip_id: impl Into<String>, frames_dir: impl Into<PathBuf>, meta: ClipMeta) -> Result<Self> {
        let clip_id = clip_id.into();
        if !(meta.fps > 0.0 && meta.fps.is_finite()) {
            return Err(Error::Validation(vec![format!("{clip_id}: fps must be positive")]));
        }
        if meta.frame_count == 0 {
            return Err(Error::Validation(vec![format!("{clip_id}: clip has no frames")]));
        }
        Ok(Self {
            clip_id,
            frames_dir: frames_dir.into(),
            fps: meta.fps,
            frame_count: meta.frame_count,
        })
    }

    /// Reads `<clip_dir>/meta.json`; frames live in `<clip_dir>/frames`.
    pub fn open(clip_id: &str, clip_dir: &Path) -> Result<Self> {
        let meta_path = clip_dir.join("meta.json");
        let bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ClipMeta = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
        Self::new(clip_id, clip_dir.join("frames"), meta)
    }

    pub fn frame_path(&self, index: usize) -> Option<PathBuf> {
        FRAME_EXTENSIONS
            .iter()
            .map(|ext| self.frames_dir.join(format!("{index:06}.{ext}")))
            .find(|p| p.is_file())
    }

    pub fn timestamp(&self, index: usize) -> f64 {
        index as f64 / self.fps
    }

    pub fn duration(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    /// Checks that every frame file exists.
    pub fn validate_files(&self) -> Result<()> {
        let missing: Vec<String> = (0..self.frame_count)
            .filter(|&i| self.frame_path(i).is_none())
            .map(|i| format!("{}: frame {i} missing in {}", self.clip_id, self.frames_dir.display()))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(missing))
        }
    }

    /// Warning when the frame count is more than one frame off `seconds · fps`.
    pub fn duration_warning(&self, seconds: f64) -> Option<String> {
        let expected = seconds * self.fps;
        ((self.frame_count as f64 - expected).abs() > 1.0).then(|| {
            format!(
                "{}: {} frames at {} fps, expected about {expected:.0} for a {seconds} s clip",
                self.clip_id, self.frame_count, self.fps
            )
        })
    }

    /// Warning when gaze data stops more than 0.5 s before the last frame.
    pub fn gaze_coverage_warning(&self, track: &GazeTrack) -> Option<String> {
        let end = self.timestamp(self.frame_count - 1);
        let last = track.fixations().last().map_or(0.0, |f| f.timestamp);
        (last < end - 0.5).then(|| {
            format!(
                "{}: gaze ends at {last:.2} s, clip ends at {end:.2} s",
                self.clip_id
            )
        })
    }
}

/// Loads the requested frames; `timestamp = index / fps`.
pub fn resolve_frames(clip: &ClipRef, indices: &[usize]) -> Result<Vec<Frame>> {
    indices
        .iter()
        .map(|&i| {
            if i >= clip.frame_count {
                return Err(Error::Precondition(format!(
                    "{}: frame index {i} outside 0..{}",
                    clip.clip_id, clip.frame_count
                )));
            }
            let path = clip.frame_path(i).ok_or_else(|| {
                Error::io(
                    clip.frames_dir.join(format!("{i:06}.png")),
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        format!("frame {i} of clip {} not found", clip.clip_id),
                    ),
                )
            })?;
            Frame::load(&path, clip.timestamp(i))
        })
        .collect()
}

/// A suite directory opened for reading.
#[derive(Debug, Clone)]
pub struct Suite {
    root: PathBuf,
    records: Vec<QuestionRecord>,
}

impl Suite {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let records = load_manifest(&root.join("manifest.jsonl"))?;
        Ok(Self { root, records })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[QuestionRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&QuestionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn clip(&self, clip_id: &str) -> Result<ClipRef> {
        ClipRef::open(clip_id, &self.root.join("clips").join(clip_id))
    }

    pub fn gaze(&self, clip_id: &str) -> Result<GazeTrack> {
        let path = self.root.join("gaze").join(format!("{clip_id}.csv"));
        if !path.exists() {
            return Ok(GazeTrack::empty(clip_id));
        }
        Ok(load_gaze_track(&path, clip_id)?.track)
    }

    pub fn mask_dir(&self) -> MaskDir {
        MaskDir::new(self.root.join("masks"))
    }

    /// Full validation pass: every clip resolves with all frames present, and
    /// every gaze file parses. Returns data-quality warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.clip_id.as_str()) {
                continue;
            }
            match self.clip(&r.clip_id).and_then(|c| c.validate_files().map(|_| c)) {
                Ok(clip) => {
                    warnings.extend(clip.duration_warning(10.0));
                    match self.gaze(&r.clip_id) {
                        Ok(track) => warnings.extend(clip.gaze_coverage_warning(&track)),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
                Err(Error::Validation(v)) => errors.extend(v),
                Err(e) => errors.push(e.to_string()),
            }
        }
        if errors.is_empty() {
            Ok(warnings)
        } else {
            Err(Error::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOptions {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub seconds: f64,
    pub gaze_hz: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            fps: 5.0,
            seconds: 10.0,
            gaze_hz: 10.0,
        }
    }
}

const OBJECTS: [&str; 32] = [
    "The lid.", "The pot with handle.", "The egg.", "The pan.", "The glass bowl.",
    "The knife.", "The cutting board.", "The sponge.", "The kettle.", "The mug.",
    "The spoon.", "The fork.", "The plate.", "The tap.", "The fridge door.",
    "The oven glove.", "The jar.", "The bottle.", "The towel.", "The spatula.",
    "The colander.", "The grater.", "The whisk.", "The ladle.", "The salt shaker.",
    "The pepper grinder.", "The tin.", "The cupboard handle.", "The drawer.", "The rice bag.",
    "The onion.", "The green capped condiment jar.",
];

fn derive_seed(seed: u64, index: u64) -> u64 {
    // SplitMix64 step over the pair.
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct SyntheticClip {
    record: QuestionRecord,
    frames: Vec<Frame>,
    track: GazeTrack,
    masks: MaskSet,
}

fn synth_clip(index: usize, seed: u64, opts: &SyntheticOptions) -> SyntheticClip {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
    let (w, h) = (opts.width, opts.height);

    let mut names: Vec<&str> = OBJECTS.to_vec();
    names.shuffle(&mut rng);
    let candidates: Vec<String> = names[..CANDIDATE_COUNT].iter().map(|s| s.to_string()).collect();
    let correct_index = rng.random_range(0..CANDIDATE_COUNT);

    // Objects occupy distinct cells of a 3x3 grid.
    let mut cells: Vec<u32> = (0..9).collect();
    cells.shuffle(&mut rng);
    let (cw, ch) = (w / 3, h / 3);
    let rects: Vec<(u32, u32, u32, u32)> = cells[..CANDIDATE_COUNT]
        .iter()
        .map(|&c| {
            let (cx, cy) = ((c % 3) * cw, (c / 3) * ch);
            let rw = rng.random_range(cw / 2..=cw.saturating_sub(2).max(cw / 2));
            let rh = rng.random_range(ch / 2..=ch.saturating_sub(2).max(ch / 2));
            let x0 = cx + rng.random_range(0..=cw - rw);
            let y0 = cy + rng.random_range(0..=ch - rh);
            (x0, y0, x0 + rw, y0 + rh)
        })
        .collect();
    let colors: Vec<Rgb> = (0..CANDIDATE_COUNT)
        .map(|_| [rng.random_range(120..=255), rng.random_range(60..=255), rng.random_range(60..=255)])
        .collect();
    let background: Rgb = [rng.random_range(10..50), rng.random_range(10..50), rng.random_range(10..50)];

    let center = |r: (u32, u32, u32, u32)| {
        (
            (r.0 + r.2) as f64 / 2.0 / (w - 1).max(1) as f64,
            (r.1 + r.3) as f64 / 2.0 / (h - 1).max(1) as f64,
        )
    };
    let target = center(rects[correct_index]);

    let frame_count = (opts.seconds * opts.fps).round().max(1.0) as usize;
    let end = (frame_count - 1) as f64 / opts.fps;
    let frames: Vec<Frame> = (0..frame_count)
        .map(|i| {
            let t = i as f64 / opts.fps;
            let mut f = Frame::filled(w, h, background, t);
            for (r, c) in rects.iter().zip(&colors) {
                for y in r.1..r.3 {
                    for x in r.0..r.2 {
                        f.put(x, y, *c);
                    }
                }
            }
            // A hand marker moving from the bottom edge toward the target.
            let progress = if end > 0.0 { t / end } else { 1.0 };
            let hx = (0.5 + (target.0 - 0.5) * progress) * (w - 1) as f64;
            let hy = (1.0 + (target.1 - 1.0) * progress) * (h - 1) as f64;
            let (hx, hy) = (hx.round() as i64, hy.round() as i64);
            for y in (hy - 1).max(0)..=(hy + 1).min(h as i64 - 1) {
                for x in (hx - 1).max(0)..=(hx + 1).min(w as i64 - 1) {
                    f.put(x as u32, y as u32, [230, 190, 160]);
                }
            }
            f
        })
        .collect();

    // Gaze wanders over random objects, then settles on the target for the last third.
    let samples = (end * opts.gaze_hz).floor() as usize + 1;
    let mut fixations = Vec::with_capacity(samples);
    let mut focus = center(rects[rng.random_range(0..CANDIDATE_COUNT)]);
    for k in 0..samples {
        let t = (k as f64 / opts.gaze_hz).min(end);
        let settle = t >= end * 2.0 / 3.0;
        if settle {
            focus = target;
        } else if rng.random_bool(0.1) {
            focus = center(rects[rng.random_range(0..CANDIDATE_COUNT)]);
        }
        let jitter = 0.02;
        fixations.push(GazeFixation {
            timestamp: t,
            x: (focus.0 + rng.random_range(-jitter..jitter)).clamp(0.0, 1.0),
            y: (focus.1 + rng.random_range(-jitter..jitter)).clamp(0.0, 1.0),
        });
    }
    let clip_id = format!("clip{index:05}");
    let masks = MaskSet::new(
        w,
        h,
        rects
            .iter()
            .enumerate()
            .map(|(k, r)| RegionMask::rectangle(k as u32 + 1, w, h, r.0, r.1, r.2, r.3))
            .collect(),
    )
    .expect("distinct ids and matching sizes");

    SyntheticClip {
        record: QuestionRecord {
            id: format!("q{index:05}"),
            clip_id: clip_id.clone(),
            question_text: BASE_QUESTION.to_string(),
            candidates,
            correct_index,
        },
        frames,
        track: GazeTrack::new(clip_id, fixations),
        masks,
    }
}

/// Writes a deterministic fixture suite with `count` questions under `out_dir`.
pub fn make_synthetic_suite(count: usize, seed: u64, out_dir: &Path) -> Result<Vec<QuestionRecord>> {
    make_synthetic_suite_with(count, seed, out_dir, &SyntheticOptions::default())
}

pub fn make_synthetic_suite_with(
    count: usize,
    seed: u64,
    out_dir: &Path,
    opts: &SyntheticOptions,
) -> Result<Vec<QuestionRecord>> {
    if count == 0 {
        return Err(Error::Precondition("synthetic suite needs at least one question".into()));
    }
    if opts.width < 9 || opts.height < 9 {
        return Err(Error::Precondition("synthetic frames must be at least 9x9".into()));
    }
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p, e));
    for sub in ["clips", "gaze", "masks"] {
        mkdir(&out_dir.join(sub))?;
    }
    let records = (0..count)
        .into_par_iter()
        .map(|i| -> Result<QuestionRecord> {
            let clip = synth_clip(i, seed, opts);
            let id = &clip.record.clip_id;
            let clip_dir = out_dir.join("clips").join(id);
            let frames_dir = clip_dir.join("frames");
            mkdir(&frames_dir)?;
            let meta = ClipMeta {
                fps: opts.fps,
                frame_count: clip.frames.len(),
            };
            let meta_path = clip_dir.join("meta.json");
            let mut meta_json = serde_json::to_vec_pretty(&meta).expect("plain data serializes");
            meta_json.write_all(b"\n").expect("vec write");
            std::fs::write(&meta_path, meta_json).map_err(|e| Error::io(&meta_path, e))?;
            for (k, f) in clip.frames.iter().enumerate() {
                f.save_png(&frames_dir.join(format!("{k:06}.png")))?;
            }
            write_gaze_csv(&out_dir.join("gaze").join(format!("{id}.csv")), &clip.track)?;
            clip.masks.write_rle(&out_dir.join("masks").join(format!("{id}.json")))?;
            Ok(clip.record)
        })
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&out_dir.join("manifest.jsonl"), &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_line(candidates: &[&str], correct: usize, id: &str) -> String {
        serde_json::json!({
            "id": id, "clip_id": "c", "question": BASE_QUESTION,
            "candidates": candidates, "correct_index": correct
        })
        .to_string()
    }

    const FIG4: [&str; 5] = ["The lid.", "The pot with handle.", "The egg.", "The pan.", "The glass bowl."];

    #[test]
    fn manifest_accepts_valid_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        std::fs::write(&path, record_line(&FIG4, 4, "q1") + "\n").unwrap();
        let records = load_manifest(&path).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].candidates, FIG4.map(String::from).to_vec());
        assert_eq!(records[0].correct_answer(), "The glass bowl.");
    }

    #[test]
    fn manifest_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let lines = [
            record_line(&FIG4[..4], 0, "a"),
            record_line(&FIG4, 5, "b"),
            record_line(&FIG4, 0, "b"),
            "not json".to_string(),
            record_line(&["x", "X.", "y", "z", "w"], 0, "c"),
        ];
        std::fs::write(&path, lines.join("\n")).unwrap();
        let Err(Error::Validation(errors)) = load_manifest(&path) else {
            panic!("expected validation error");
        };
        let joined = errors.join("\n");
        assert!(joined.contains("line 1: expected 5 candidates"), "{joined}");
        assert!(joined.contains("line 2: correct_index 5"), "{joined}");
        assert!(joined.contains("line 3: duplicate id"), "{joined}");
        assert!(joined.contains("line 4:"), "{joined}");
        assert!(joined.contains("line 5: candidate"), "{joined}");
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let records: Vec<QuestionRecord> = (0..3)
            .map(|i| QuestionRecord {
                id: format!("q{i}"),
                clip_id: format!("c{i}"),
                question_text: BASE_QUESTION.into(),
                candidates: FIG4.map(String::from).to_vec(),
                correct_index: i,
            })
            .collect();
        write_manifest(&path, &records).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), records);
    }

    #[test]
    fn gaze_csv_parsing() {
        let ok = parse_gaze_csv("timestamp,x,y\n0.0,0.1,0.2\n0.1,0.3,0.4\n0.2,0.5,0.6\n".as_bytes(), "c").unwrap();
        assert_eq!(ok.track.len(), 3);
        assert_eq!(ok.clamped, 0);

        let clamped = parse_gaze_csv("timestamp,x,y\n0.0,1.2,0.5\n".as_bytes(), "c").unwrap();
        assert_eq!(clamped.clamped, 1);
        assert_eq!(clamped.track.fixations()[0].x, 1.0);

        let unsorted = parse_gaze_csv("timestamp,x,y\n2,0.1,0\n1,0.2,0\n2,0.3,0\n".as_bytes(), "c").unwrap();
        let xs: Vec<f64> = unsorted.track.fixations().iter().map(|f| f.x).collect();
        assert_eq!(xs, vec![0.2, 0.1, 0.3]);

        let bad = parse_gaze_csv("timestamp,x,y\n0,0.1,0\n0.1,abc,0\n".as_bytes(), "c");
        assert!(matches!(bad, Err(Error::Parse { row: 3, .. })), "{bad:?}");
    }

    #[test]
    fn resolve_frames_sets_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SyntheticOptions {
            seconds: 2.0,
            ..Default::default()
        };
        make_synthetic_suite_with(1, 3, dir.path(), &opts).unwrap();
        let suite = Suite::open(dir.path()).unwrap();
        let clip = suite.clip(&suite.records()[0].clip_id).unwrap();
        assert_eq!(clip.frame_count, 10);
        let frames = resolve_frames(&clip, &[0, 9]).unwrap();
        assert_eq!(frames[0].timestamp, 0.0);
        assert_eq!(frames[1].timestamp, 9.0 / 5.0);
        assert!(matches!(resolve_frames(&clip, &[10]), Err(Error::Precondition(_))));
        std::fs::remove_file(clip.frame_path(4).unwrap()).unwrap();
        let err = resolve_frames(&clip, &[4]).unwrap_err();
        assert!(err.to_string().contains("frame 4"), "{err}");
    }

    #[test]
    fn duration_check() {
        let clip = ClipRef::new("c", "/nonexistent", ClipMeta { fps: 25.0, frame_count: 251 }).unwrap();
        assert!(clip.duration_warning(10.0).is_none());
        let short = ClipRef::new("c", "/nonexistent", ClipMeta { fps: 25.0, frame_count: 240 }).unwrap();
        assert!(short.duration_warning(10.0).is_some());
    }

    #[test]
    fn synthetic_suite_validates_and_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let records = make_synthetic_suite(20, 1, a.path()).unwrap();
        make_synthetic_suite(20, 1, b.path()).unwrap();
        assert_eq!(records.len(), 20);

        let suite = Suite::open(a.path()).unwrap();
        assert_eq!(suite.records(), &records[..]);
        let warnings = suite.validate().unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        for r in &records {
            let clip = suite.clip(&r.clip_id).unwrap();
            let last = resolve_frames(&clip, &[clip.frame_count - 1]).unwrap();
            let masks = suite.mask_dir().masks_for_test(&r.clip_id, &last[0]);
            assert_eq!(masks.len(), 5);
        }

        let files = |root: &Path| {
            let mut v: Vec<(PathBuf, Vec<u8>)> = walk(root)
                .into_iter()
                .map(|p| (p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(files(a.path()), files(b.path()));
    }

    #[test]
    fn zero_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(make_synthetic_suite(0, 1, dir.path()), Err(Error::Precondition(_))));
    }

    fn walk(root: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(root).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }

    impl MaskDir {
        fn masks_for_test(&self, clip_id: &str, frame: &Frame) -> MaskSet {
            use crate::masks::MaskSource;
            self.masks_for(clip_id, 0, frame).unwrap()
        }
    }
}
