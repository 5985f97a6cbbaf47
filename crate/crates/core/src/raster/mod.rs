//! Grid types shared by every stage, plus file I/O and resampling.
//!
//! All grids are row-major with `index = y * width + x`.

mod io;
mod resize;

pub use io::{
    load_heatmap, load_labelmap, load_mask, load_rgb, save_heatmap, save_labelmap, save_mask,
    HeatmapFormat, F32_MAGIC,
};

use crate::error::{Error, Result};

/// Canonical working resolution when no reference raster fixes one.
pub const CANONICAL_SIZE: (usize, usize) = (384, 384);

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::InvalidRaster(format!(
            "{width}x{height} grid needs {} values, got {len}",
            width.saturating_mul(height)
        ))),
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Activation or probability map with every value finite and in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::InvalidRaster(format!(
                "heatmap value {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(Heatmap {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Heatmap::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Heatmap::new(width, height, values)
    }

    /// Callers guarantee the invariants; used by stages whose arithmetic keeps
    /// results inside `[0, 1]`.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        Heatmap {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Stretches values to span `[0, 1]`. A constant map carries no activation
    /// evidence and becomes all zeros.
    pub fn normalize_minmax(&self) -> Heatmap {
        let (lo, hi) = self.min_max();
        let values = if hi > lo {
            let range = f64::from(hi) - f64::from(lo);
            self.values
                .iter()
                .map(|&v| ((f64::from(v) - f64::from(lo)) / range).clamp(0.0, 1.0) as f32)
                .collect()
        } else {
            vec![0.0; self.values.len()]
        };
        Heatmap::from_raw(self.width, self.height, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v)).sum::<f64>() / self.values.len() as f64
    }
}

/// Segmentation output: 0 is background, every other value names one candidate region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        Ok(LabelMap {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u32) -> Result<Self> {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        LabelMap::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Distinct labels present, ascending, including 0 if present.
    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_heatmap(&self) -> Heatmap {
        Heatmap::from_raw(
            self.width,
            self.height,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_rejects_out_of_range_and_non_finite() {
        assert!(Heatmap::new(2, 1, vec![0.0, 1.0]).is_ok());
        assert!(Heatmap::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(Heatmap::new(2, 1, vec![f32::NAN, 0.5]).is_err());
        assert!(Heatmap::new(2, 1, vec![-0.1, 0.5]).is_err());
        assert!(Heatmap::new(0, 1, vec![]).is_err());
        assert!(Heatmap::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn minmax_endpoints() {
        let h = Heatmap::new(2, 1, vec![0.2, 0.6]).unwrap();
        assert_eq!(h.normalize_minmax().values(), &[0.0, 1.0]);
    }

    #[test]
    fn minmax_constant_is_zero() {
        let h = Heatmap::filled(3, 3, 0.4).unwrap();
        assert!(h.normalize_minmax().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn minmax_interior_value() {
        let h = Heatmap::new(3, 1, vec![0.1, 0.2, 0.5]).unwrap();
        let n = h.normalize_minmax();
        // (0.2 - 0.1) / (0.5 - 0.1), evaluated on the f32-rounded inputs
        let expected = ((0.2f32 as f64 - 0.1f32 as f64) / (0.5f32 as f64 - 0.1f32 as f64)) as f32;
        assert_eq!(n.values(), &[0.0, expected, 1.0]);
        assert!((n.values()[1] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn mask_area_and_labels() {
        let m = BinaryMask::new(3, 1, vec![true, false, true]).unwrap();
        assert_eq!(m.area(), 2);
        let l = LabelMap::new(3, 1, vec![7, 0, 3]).unwrap();
        assert_eq!(l.distinct_labels(), vec![0, 3, 7]);
    }
}
