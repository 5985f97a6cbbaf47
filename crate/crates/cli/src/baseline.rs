//! Reference fusion rules for comparison against the geometric mean.

use manloc_core::{Error, Heatmap, Result};

fn combine(maps: &[Heatmap], f: impl Fn(&mut dyn Iterator<Item = f32>) -> f32) -> Result<Heatmap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot fuse an empty list of maps".into()))?;
    for m in maps {
        if m.dims() != first.dims() {
            return Err(Error::DimensionMismatch {
                expected: first.dims(),
                actual: m.dims(),
            });
        }
    }
    let (w, h) = first.dims();
    let values = (0..w * h)
        .map(|i| f(&mut maps.iter().map(|m| m.values()[i])))
        .collect();
    Heatmap::new(w, h, values)
}

pub fn fuse_arithmetic(maps: &[Heatmap]) -> Result<Heatmap> {
    let n = maps.len() as f64;
    combine(maps, |vals| {
        (vals.map(f64::from).sum::<f64>() / n).clamp(0.0, 1.0) as f32
    })
}

pub fn fuse_max(maps: &[Heatmap]) -> Result<Heatmap> {
    combine(maps, |vals| vals.fold(0.0, f32::max))
}
