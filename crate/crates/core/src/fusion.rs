//! Multi-scale activation fusion by per-pixel geometric mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, Heatmap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Floor applied to every input value before fusing, so a single zero
    /// cannot annihilate a pixel.
    pub epsilon: f64,
    /// Scale ids of the activation maps, in manifest order.
    pub scales: Vec<u32>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            epsilon: 1e-6,
            scales: vec![2, 3, 4],
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fusion epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidParameter(
                "fusion needs at least one scale".into(),
            ));
        }
        Ok(())
    }
}

/// Geometric mean of `values` after clamping each to `[epsilon, 1]`.
///
/// Logs are summed in ascending order of the clamped values, which makes the
/// result independent of input order bit for bit. The result is pinned to the
/// range of the clamped inputs so rounding in `exp(ln x)` cannot leave it.
pub fn geometric_mean_clamped(values: &mut [f64], epsilon: f64) -> f64 {
    for v in values.iter_mut() {
        *v = v.clamp(epsilon, 1.0);
    }
    values.sort_unstable_by(f64::total_cmp);
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    let (lo, hi) = (values[0], values[values.len() - 1]);
    (log_sum / values.len() as f64).exp().clamp(lo, hi)
}

/// Fuses same-sized maps into `(prod clamp(A_i, eps, 1))^(1/n)` per pixel.
pub fn fuse_geometric(maps: &[Heatmap], cfg: &FusionConfig) -> Result<Heatmap> {
    cfg.validate()?;
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot fuse an empty list of maps".into()))?;
    for m in &maps[1..] {
        ensure_same_dims(first.dims(), m.dims())?;
    }
    let (w, h) = first.dims();
    let mut scratch = vec![0.0f64; maps.len()];
    let values = (0..w * h)
        .map(|i| {
            for (slot, m) in scratch.iter_mut().zip(maps) {
                *slot = f64::from(m.values()[i]);
            }
            geometric_mean_clamped(&mut scratch, cfg.epsilon) as f32
        })
        .collect();
    Ok(Heatmap::from_raw(w, h, values))
}
