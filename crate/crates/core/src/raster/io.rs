//! Raster file formats.
//!
//! Heatmaps are stored either as 16-bit grayscale PNG (`v * 65535`, rounded) or
//! in the lossless `F32M` raw format:
//!
//! ```text
//! b"F32M" | height: u32 LE | width: u32 LE | height * width f32 LE, row-major
//! ```
//!
//! Label maps are 16-bit grayscale PNG, binary masks 8-bit grayscale PNG (0/255).

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma, RgbImage};

use super::{BinaryMask, Heatmap, LabelMap};
use crate::error::{Error, Result};

pub const F32_MAGIC: &[u8; 4] = b"F32M";
const PNG_SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapFormat {
    Png16,
    F32raw,
}

impl HeatmapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            HeatmapFormat::Png16 => "png",
            HeatmapFormat::F32raw => "f32",
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_u32(path: &Path, n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::format(path, format!("dimension {n} exceeds u32")))
}

/// Decodes a single-channel PNG, returning `(width, height, samples, max_value)`.
fn decode_gray_png(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u16>, u16)> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Ok((
            w,
            h,
            buf.into_raw().into_iter().map(u16::from).collect(),
            u8::MAX as u16,
        )),
        DynamicImage::ImageLuma16(buf) => Ok((w, h, buf.into_raw(), u16::MAX)),
        other => Err(Error::format(
            path,
            format!(
                "expected a single-channel PNG, found {} channels ({:?})",
                other.color().channel_count(),
                other.color()
            ),
        )),
    }
}

fn encode_png<P>(path: &Path, width: usize, height: usize, data: Vec<P::Subpixel>) -> Result<()>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
{
    let buf = ImageBuffer::<P, Vec<P::Subpixel>>::from_raw(
        to_u32(path, width)?,
        to_u32(path, height)?,
        data,
    )
    .ok_or_else(|| Error::format(path, "buffer size does not match dimensions"))?;
    let mut bytes = Vec::new();
    buf.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)?;
    write(path, &bytes)
}

fn decode_f32raw(path: &Path, bytes: &[u8]) -> Result<Heatmap> {
    if bytes.len() < 12 {
        return Err(Error::format(path, "truncated F32M header"));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(path, "F32M dimensions overflow"))?;
    if body.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "F32M {width}x{height} needs {expected} payload bytes, found {}",
                body.len()
            ),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Heatmap::new(width, height, values).map_err(|e| Error::format(path, e.to_string()))
}

fn encode_f32raw(h: &Heatmap, path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(12 + 4 * h.values().len());
    bytes.extend_from_slice(F32_MAGIC);
    bytes.extend_from_slice(&to_u32(path, h.height())?.to_le_bytes());
    bytes.extend_from_slice(&to_u32(path, h.width())?.to_le_bytes());
    for v in h.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

/// Loads a heatmap from a single-channel PNG (`v / max`) or an `F32M` raw file.
/// The format is detected from the file's leading bytes.
pub fn load_heatmap(path: impl AsRef<Path>) -> Result<Heatmap> {
    let path = path.as_ref();
    let bytes = read(path)?;
    if bytes.starts_with(F32_MAGIC) {
        decode_f32raw(path, &bytes)
    } else if bytes.starts_with(PNG_SIGNATURE) {
        let (w, h, samples, max) = decode_gray_png(path, &bytes)?;
        let scale = f64::from(max);
        let values = samples
            .into_iter()
            .map(|s| (f64::from(s) / scale) as f32)
            .collect();
        Heatmap::new(w, h, values)
    } else {
        Err(Error::format(path, "neither a PNG nor an F32M raster"))
    }
}

pub fn save_heatmap(h: &Heatmap, path: impl AsRef<Path>, format: HeatmapFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        HeatmapFormat::Png16 => {
            let data = h
                .values()
                .iter()
                .map(|&v| (f64::from(v) * 65535.0).round() as u16)
                .collect();
            encode_png::<Luma<u16>>(path, h.width(), h.height(), data)
        }
        HeatmapFormat::F32raw => write(path, &encode_f32raw(h, path)?),
    }
}

pub fn load_labelmap(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let (w, h, samples, _) = decode_gray_png(path, &bytes)?;
    LabelMap::new(w, h, samples.into_iter().map(u32::from).collect())
}

pub fn save_labelmap(m: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data = m
        .labels()
        .iter()
        .map(|&l| {
            u16::try_from(l)
                .map_err(|_| Error::format(path, format!("label {l} does not fit in 16 bits")))
        })
        .collect::<Result<Vec<u16>>>()?;
    encode_png::<Luma<u16>>(path, m.width(), m.height(), data)
}

/// Any non-zero sample is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let (w, h, samples, _) = decode_gray_png(path, &bytes)?;
    BinaryMask::new(w, h, samples.into_iter().map(|s| s != 0).collect())
}

pub fn save_mask(m: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data = m.bits().iter().map(|&b| if b { 255u8 } else { 0 }).collect();
    encode_png::<Luma<u8>>(path.as_ref(), m.width(), m.height(), data)
}

/// Loads any supported image file and converts it to 8-bit RGB.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let img = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(img.to_rgb8())
}
