//! Signed error-level analysis: the per-channel difference between an image
//! and its JPEG recompression, kept signed and scaled to `[-1, 1]`.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageBuffer, ImageFormat, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::raster::Heatmap;

pub const DEFAULT_QUALITY: u8 = 90;

#[derive(Clone, Debug, PartialEq)]
pub struct SignedResidual {
    width: usize,
    height: usize,
    values: Vec<[f32; 3]>,
}

impl SignedResidual {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[[f32; 3]] {
        &self.values
    }

    pub fn max_abs(&self) -> f32 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f32, |m, v| m.max(v.abs()))
    }

    pub fn mean_abs(&self) -> f64 {
        let sum: f64 = self.values.iter().flatten().map(|v| f64::from(v.abs())).sum();
        sum / (3 * self.values.len()) as f64
    }

    /// Writes the residual as a 16-bit RGB PNG with `v -> round((v + 1) / 2 * 65535)`.
    pub fn save_png16(&self, path: impl AsRef<Path>) -> Result<()> {
        let data: Vec<u16> = self
            .values
            .iter()
            .flatten()
            .map(|&v| ((f64::from(v) + 1.0) / 2.0 * 65535.0).round() as u16)
            .collect();
        let buf = ImageBuffer::<Rgb<u16>, _>::from_raw(self.width as u32, self.height as u32, data)
            .expect("buffer length matches dims");
        buf.save_with_format(path, ImageFormat::Png)?;
        Ok(())
    }
}

/// `(recompressed - original) / 255` per channel.
pub fn signed_difference(original: &RgbImage, recompressed: &RgbImage) -> Result<SignedResidual> {
    if original.dimensions() != recompressed.dimensions() {
        let (ow, oh) = original.dimensions();
        let (rw, rh) = recompressed.dimensions();
        return Err(Error::DimensionMismatch {
            expected: (ow as usize, oh as usize),
            actual: (rw as usize, rh as usize),
        });
    }
    let values = original
        .pixels()
        .zip(recompressed.pixels())
        .map(|(a, b)| {
            let mut out = [0.0f32; 3];
            for (c, o) in out.iter_mut().enumerate() {
                *o = (f32::from(b[c]) - f32::from(a[c])) / 255.0;
            }
            out
        })
        .collect();
    Ok(SignedResidual {
        width: original.width() as usize,
        height: original.height() as usize,
        values,
    })
}

/// Encodes to JPEG at `quality` and decodes again.
pub fn jpeg_roundtrip(img: &RgbImage, quality: u8) -> Result<RgbImage> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!(
            "JPEG quality must be in 1..=100, got {quality}"
        )));
    }
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut Cursor::new(&mut bytes), quality).encode_image(img)?;
    Ok(image::load_from_memory_with_format(&bytes, ImageFormat::Jpeg)?.to_rgb8())
}

pub fn signed_ela(img: &RgbImage, quality: u8) -> Result<SignedResidual> {
    let recompressed = jpeg_roundtrip(img, quality)?;
    signed_difference(img, &recompressed)
}

/// Grayscale preview: maps each channel by `(v + 1) / 2` and keeps the maximum.
pub fn residual_to_heatmap_preview(r: &SignedResidual) -> Heatmap {
    let values = r
        .values
        .iter()
        .map(|px| {
            px.iter()
                .map(|&v| ((v + 1.0) / 2.0).clamp(0.0, 1.0))
                .fold(0.0f32, f32::max)
        })
        .collect();
    Heatmap::from_raw(r.width, r.height, values)
}
