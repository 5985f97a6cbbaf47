use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::raster::Heatmap;

const ANCHORS: [(f64, [f64; 3]); 3] = [
    (0.0, [0.0, 0.0, 255.0]),
    (0.5, [255.0, 255.0, 0.0]),
    (1.0, [255.0, 0.0, 0.0]),
];

/// Blue at 0, yellow at 0.5, red at 1, linear in between.
pub fn colormap(v: f64) -> [f64; 3] {
    let v = v.clamp(0.0, 1.0);
    let (lo, hi) = if v <= ANCHORS[1].0 {
        (ANCHORS[0], ANCHORS[1])
    } else {
        (ANCHORS[1], ANCHORS[2])
    };
    let t = (v - lo.0) / (hi.0 - lo.0);
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = lo.1[c] + (hi.1[c] - lo.1[c]) * t;
    }
    out
}

/// `(1 - alpha) * src + alpha * colormap(h)`, rounded per channel. The heatmap
/// is resampled bilinearly when its dims differ from the image.
pub fn render_overlay(src: &RgbImage, heat: &Heatmap, alpha: f64) -> Result<RgbImage> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let (w, h) = (src.width() as usize, src.height() as usize);
    let heat = if heat.dims() == (w, h) {
        heat.clone()
    } else {
        heat.resize_bilinear(w, h)?
    };
    Ok(RgbImage::from_fn(src.width(), src.height(), |x, y| {
        let color = colormap(f64::from(heat.get(x as usize, y as usize)));
        let px = src.get_pixel(x, y);
        let mut out = [0u8; 3];
        for c in 0..3 {
            let v = (1.0 - alpha) * f64::from(px[c]) + alpha * color[c];
            out[c] = v.round().clamp(0.0, 255.0) as u8;
        }
        Rgb(out)
    }))
}
