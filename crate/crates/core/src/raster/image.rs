//! Float RGB images plus PNG and raw-float serialization.
//!
//! The raw dump is a little-endian file: the magic `RAWF`, then `u32`
//! version (1), width, height and channel count, followed by row-major
//! `f32` samples with channels interleaved.

use std::io::{Read, Write};
use std::path::Path;

use super::RasterError;

pub const RAW_MAGIC: &[u8; 4] = b"RAWF";
pub const RAW_VERSION: u32 = 1;

/// Row-major RGB image with interleaved `f64` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height * 3] }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let mut img = Self::new(width, height);
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        img
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// 8-bit quantization used for PNG output.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Self {
        Self { width, height, data: bytes.iter().map(|&b| f64::from(b) / 255.0).collect() }
    }

    /// Round-trips through 8 bits, giving exactly what a PNG reload yields.
    pub fn quantized(&self) -> Self {
        Self::from_rgb8(self.width, self.height, &self.to_rgb8())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.to_rgb8())
            .ok_or_else(|| RasterError::Image { path: path.display().to_string(), message: "buffer size".into() })?;
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| RasterError::Image { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load_png(path: &Path) -> Result<Self, RasterError> {
        let img = image::open(path)
            .map_err(|e| RasterError::Image { path: path.display().to_string(), message: e.to_string() })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Ok(Self::from_rgb8(w as usize, h as usize, img.as_raw()))
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(RAW_MAGIC)?;
        for v in [RAW_VERSION, self.width as u32, self.height as u32, 3] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self, RasterError> {
        let bad = |m: &str| RasterError::RawFormat(m.to_string());
        let mut header = [0u8; 20];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if &header[..4] != RAW_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        if word(4) != RAW_VERSION {
            return Err(bad("unsupported version"));
        }
        let (w, h, c) = (word(8) as usize, word(12) as usize, word(16) as usize);
        if c != 3 {
            return Err(bad("expected 3 channels"));
        }
        let mut body = vec![0u8; w * h * c * 4];
        r.read_exact(&mut body).map_err(|_| bad("truncated body"))?;
        let data = body.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap()))).collect();
        Ok(Self { width: w, height: h, data })
    }
}
