use std::path::Path;

use image::RgbImage;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// A decoded RGB8 video frame, row-major, tagged with its time in the clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    pub timestamp: f64,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, timestamp: f64) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::Format(format!(
                "frame buffer holds {} bytes, {width}x{height} RGB needs {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            timestamp,
        })
    }

    pub fn filled(width: u32, height: u32, color: Rgb, timestamp: f64) -> Self {
        let pixels = color
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self {
            width,
            height,
            pixels,
            timestamp,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, color: Rgb) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&color);
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    /// SHA-256 of the raw pixel buffer, hex encoded. Independent of any file encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(&self.pixels))
    }

    pub fn from_image(img: RgbImage, timestamp: f64) -> Self {
        let (width, height) = img.dimensions();
        Self {
            width,
            height,
            pixels: img.into_raw(),
            timestamp,
        }
    }

    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length checked at construction")
    }

    pub fn load(path: &Path, timestamp: f64) -> Result<Self> {
        let img = image::open(path).map_err(|e| match e {
            image::ImageError::IoError(source) => Error::io(path, source),
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
        Ok(Self::from_image(img.to_rgb8(), timestamp))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(source) => Error::io(path, source),
                other => Error::Format(other.to_string()),
            })
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_image()
            .write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_buffer_length() {
        assert!(Frame::new(2, 2, vec![0; 11], 0.0).is_err());
        assert!(Frame::new(2, 2, vec![0; 12], 0.0).is_ok());
    }

    #[test]
    fn png_round_trip_preserves_pixels() {
        let mut f = Frame::filled(5, 3, [10, 20, 30], 0.5);
        f.put(4, 2, [255, 0, 7]);
        let bytes = f.encode_png().unwrap();
        let back = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(Frame::from_image(back, 0.5), f);
    }

    #[test]
    fn digest_tracks_pixels_only() {
        let a = Frame::filled(4, 4, [1, 2, 3], 0.0);
        let mut b = a.clone();
        b.timestamp = 3.0;
        assert_eq!(a.digest(), b.digest());
        b.put(0, 0, [1, 2, 4]);
        assert_ne!(a.digest(), b.digest());
    }
}
