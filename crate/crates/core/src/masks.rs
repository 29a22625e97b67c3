//! Segmentation masks for the final frame of a clip.
//!
//! Masks come from pre-computed files (RLE JSON or single-channel indexed
//! images) or from a remote segmentation service that speaks the same RLE
//! JSON contract.
//!
//! RLE counts alternate background/foreground over the row-major pixel order,
//! always starting with a background run (possibly 0).

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::backends::ratelimit::RateLimiter;
use crate::backends::transport::{check_status, HttpRequest, Transport, UreqTransport};
use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    region_id: u32,
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl RegionMask {
    pub fn from_counts(region_id: u32, width: u32, height: u32, counts: Vec<u32>) -> Result<Self> {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = width as u64 * height as u64;
        if total != expected {
            return Err(Error::Format(format!(
                "region {region_id}: runs sum to {total}, expected {expected} ({width}x{height})"
            )));
        }
        Ok(Self {
            region_id,
            width,
            height,
            counts,
        })
    }

    pub fn from_bitmap(region_id: u32, width: u32, height: u32, bitmap: &[bool]) -> Result<Self> {
        if bitmap.len() != width as usize * height as usize {
            return Err(Error::Format(format!(
                "region {region_id}: bitmap has {} cells, expected {width}x{height}",
                bitmap.len()
            )));
        }
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &cell in bitmap {
            if cell != current {
                counts.push(run);
                run = 0;
                current = cell;
            }
            run += 1;
        }
        counts.push(run);
        Ok(Self {
            region_id,
            width,
            height,
            counts,
        })
    }

    /// Axis-aligned rectangle `[x0, x1) × [y0, y1)`, clipped to the frame.
    pub fn rectangle(region_id: u32, width: u32, height: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        let mut bitmap = vec![false; width as usize * height as usize];
        for y in y0.min(height)..y1.min(height) {
            for x in x0.min(width)..x1.min(width) {
                bitmap[(y * width + x) as usize] = true;
            }
        }
        Self::from_bitmap(region_id, width, height, &bitmap).expect("bitmap sized from dimensions")
    }

    pub fn region_id(&self) -> u32 {
        self.region_id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.width as usize * self.height as usize);
        for (i, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
        }
        out
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    width: u32,
    height: u32,
    regions: Vec<RegionMask>,
}

impl MaskSet {
    /// Sorts regions by id; rejects duplicate ids and mismatched dimensions.
    pub fn new(width: u32, height: u32, mut regions: Vec<RegionMask>) -> Result<Self> {
        regions.sort_by_key(|r| r.region_id);
        for pair in regions.windows(2) {
            if pair[0].region_id == pair[1].region_id {
                return Err(Error::Format(format!("duplicate region id {}", pair[0].region_id)));
            }
        }
        for r in &regions {
            if r.width != width || r.height != height {
                return Err(Error::Format(format!(
                    "region {} is {}x{}, mask set is {width}x{height}",
                    r.region_id, r.width, r.height
                )));
            }
        }
        Ok(Self {
            width,
            height,
            regions,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            regions: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn regions(&self) -> &[RegionMask] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn to_rle(&self) -> RleDocument {
        RleDocument {
            width: self.width,
            height: self.height,
            regions: self
                .regions
                .iter()
                .map(|r| RleRegion {
                    id: r.region_id,
                    counts: r.counts.clone(),
                })
                .collect(),
        }
    }

    pub fn write_rle(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(&self.to_rle()).expect("plain data serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

/// Wire and file form of a [`MaskSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RleDocument {
    pub width: u32,
    pub height: u32,
    pub regions: Vec<RleRegion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RleRegion {
    pub id: u32,
    pub counts: Vec<u32>,
}

impl TryFrom<RleDocument> for MaskSet {
    type Error = Error;

    fn try_from(doc: RleDocument) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut regions = Vec::with_capacity(doc.regions.len());
        for r in doc.regions {
            if !seen.insert(r.id) {
                return Err(Error::Format(format!("duplicate region id {}", r.id)));
            }
            regions.push(RegionMask::from_counts(r.id, doc.width, doc.height, r.counts)?);
        }
        MaskSet::new(doc.width, doc.height, regions)
    }
}

pub fn parse_masks_rle(bytes: &[u8]) -> Result<MaskSet> {
    let doc: RleDocument =
        serde_json::from_slice(bytes).map_err(|e| Error::Format(format!("mask JSON: {e}")))?;
    MaskSet::try_from(doc)
}

pub fn load_masks_rle(path: &Path) -> Result<MaskSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_masks_rle(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Single-channel image where value 0 is background and value `k > 0` is region `k`.
pub fn load_masks_indexed_image(path: &Path) -> Result<MaskSet> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(source) if source.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::io(path, source)
        }
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let (width, height) = (img.width(), img.height());
    let values: Vec<u32> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                message: format!("expected a single-channel image, got {:?}", other.color()),
            })
        }
    };
    let mut bitmaps: BTreeMap<u32, Vec<bool>> = BTreeMap::new();
    for (i, &v) in values.iter().enumerate() {
        if v != 0 {
            bitmaps.entry(v).or_insert_with(|| vec![false; values.len()])[i] = true;
        }
    }
    let regions = bitmaps
        .into_iter()
        .map(|(id, bitmap)| RegionMask::from_bitmap(id, width, height, &bitmap))
        .collect::<Result<Vec<_>>>()?;
    MaskSet::new(width, height, regions)
}

/// Where the pipeline gets final-frame masks from.
pub trait MaskSource: Send + Sync {
    fn masks_for(&self, clip_id: &str, frame_index: usize, frame: &Frame) -> Result<MaskSet>;
}

/// Pre-computed masks, one file per clip: `<dir>/<clip_id>.json` (RLE) or
/// `<dir>/<clip_id>.png` (indexed image).
#[derive(Debug, Clone)]
pub struct MaskDir {
    root: PathBuf,
}

impl MaskDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path_for(&self, clip_id: &str) -> Option<PathBuf> {
        ["json", "png"]
            .iter()
            .map(|ext| self.root.join(format!("{clip_id}.{ext}")))
            .find(|p| p.is_file())
    }
}

impl MaskSource for MaskDir {
    fn masks_for(&self, clip_id: &str, _frame_index: usize, frame: &Frame) -> Result<MaskSet> {
        let path = self.path_for(clip_id).ok_or_else(|| {
            Error::io(
                self.root.join(format!("{clip_id}.json")),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no mask file for clip"),
            )
        })?;
        let masks = if path.extension().is_some_and(|e| e == "json") {
            load_masks_rle(&path)?
        } else {
            load_masks_indexed_image(&path)?
        };
        check_dimensions(&masks, frame)?;
        Ok(masks)
    }
}

fn check_dimensions(masks: &MaskSet, frame: &Frame) -> Result<()> {
    if masks.width != frame.width() || masks.height != frame.height() {
        return Err(Error::Contract(format!(
            "masks are {}x{}, frame is {}x{}",
            masks.width,
            masks.height,
            frame.width(),
            frame.height()
        )));
    }
    Ok(())
}

/// Client for a segmentation service: POST the frame as PNG, receive RLE JSON.
pub struct RemoteMaskClient {
    endpoint: String,
    transport: Arc<dyn Transport>,
    limiter: Arc<RateLimiter>,
}

impl RemoteMaskClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self::with_transport(
            endpoint,
            Arc::new(UreqTransport::new(timeout)),
            Arc::new(RateLimiter::unlimited()),
        )
    }

    pub fn with_transport(
        endpoint: impl Into<String>,
        transport: Arc<dyn Transport>,
        limiter: Arc<RateLimiter>,
    ) -> Self {
        Self {
            endpoint: endpoint.into(),
            transport,
            limiter,
        }
    }

    pub fn fetch(&self, frame: &Frame) -> Result<MaskSet> {
        let body = frame.encode_png()?;
        self.limiter.acquire();
        let response = self
            .transport
            .post(&HttpRequest::post(&self.endpoint, "image/png", body))?;
        let bytes = check_status(&self.endpoint, response)?;
        let masks = parse_masks_rle(&bytes)?;
        check_dimensions(&masks, frame)?;
        Ok(masks)
    }
}

impl MaskSource for RemoteMaskClient {
    fn masks_for(&self, _clip_id: &str, _frame_index: usize, frame: &Frame) -> Result<MaskSet> {
        self.fetch(frame)
    }
}

pub fn fetch_masks_remote(endpoint: &str, frame: &Frame, timeout: Duration) -> Result<MaskSet> {
    RemoteMaskClient::new(endpoint, timeout).fetch(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(json: &str) -> Result<MaskSet> {
        parse_masks_rle(json.as_bytes())
    }

    #[test]
    fn decodes_rle_by_definition() {
        let set = doc(r#"{"width":4,"height":1,"regions":[{"id":1,"counts":[1,2,1]}]}"#).unwrap();
        assert_eq!(set.regions()[0].to_bitmap(), vec![false, true, true, false]);
        // Leading zero background run.
        let set = doc(r#"{"width":2,"height":1,"regions":[{"id":1,"counts":[0,2]}]}"#).unwrap();
        assert_eq!(set.regions()[0].to_bitmap(), vec![true, true]);
    }

    #[test]
    fn rejects_duplicates_and_bad_sums() {
        let dup = doc(r#"{"width":2,"height":1,"regions":[{"id":1,"counts":[2]},{"id":1,"counts":[2]}]}"#);
        assert!(matches!(dup, Err(Error::Format(m)) if m.contains("duplicate region id 1")));
        let short = doc(r#"{"width":4,"height":1,"regions":[{"id":7,"counts":[1,2]}]}"#);
        assert!(matches!(short, Err(Error::Format(m)) if m.contains("region 7")));
        assert!(matches!(doc("{"), Err(Error::Format(_))));
    }

    #[test]
    fn file_order_does_not_matter() {
        let a = doc(r#"{"width":2,"height":1,"regions":[{"id":3,"counts":[1,1]},{"id":1,"counts":[0,1,1]}]}"#).unwrap();
        let b = doc(r#"{"width":2,"height":1,"regions":[{"id":1,"counts":[0,1,1]},{"id":3,"counts":[1,1]}]}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.regions()[0].region_id(), 1);
    }

    #[test]
    fn rectangle_area() {
        let r = RegionMask::rectangle(1, 10, 10, 2, 3, 5, 7);
        assert_eq!(r.area(), 12);
        let clipped = RegionMask::rectangle(2, 10, 10, 8, 8, 20, 20);
        assert_eq!(clipped.area(), 4);
    }

    #[test]
    fn indexed_images() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let img = image::GrayImage::from_fn(6, 4, |x, y| image::Luma([((x + y) % 4) as u8]));
        img.save(&path).unwrap();
        let set = load_masks_indexed_image(&path).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.regions().iter().map(|r| r.region_id()).collect::<Vec<_>>(), vec![1, 2, 3]);

        let zero = dir.path().join("z.png");
        image::GrayImage::new(3, 3).save(&zero).unwrap();
        assert!(load_masks_indexed_image(&zero).unwrap().is_empty());

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::new(3, 3).save(&rgb).unwrap();
        assert!(matches!(load_masks_indexed_image(&rgb), Err(Error::Decode { .. })));

        let bytes = std::fs::read(&path).unwrap();
        let trunc = dir.path().join("t.png");
        std::fs::write(&trunc, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_masks_indexed_image(&trunc), Err(Error::Decode { .. })));
    }

    fn arb_mask_set() -> impl Strategy<Value = MaskSet> {
        (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
            let cells = (w * h) as usize;
            proptest::collection::btree_map(0u32..50, proptest::collection::vec(any::<bool>(), cells), 0..5)
                .prop_map(move |regions| {
                    let regions = regions
                        .into_iter()
                        .map(|(id, bm)| RegionMask::from_bitmap(id, w, h, &bm).unwrap())
                        .collect();
                    MaskSet::new(w, h, regions).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip(set in arb_mask_set()) {
            let json = serde_json::to_vec(&set.to_rle()).unwrap();
            let back = parse_masks_rle(&json).unwrap();
            for r in back.regions() {
                let sum: u64 = r.counts().iter().map(|&c| c as u64).sum();
                prop_assert_eq!(sum, set.width() as u64 * set.height() as u64);
            }
            prop_assert_eq!(back, set);
        }
    }
}
