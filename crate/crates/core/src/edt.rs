//! Exact Euclidean distance transform.
//!
//! Every foreground pixel gets the distance, center to center, to the nearest
//! background pixel. Pixels outside the grid count as background, so regions
//! touching the border still get finite distances. An axis of length 1 is
//! treated as a 1-D signal: no virtual background is placed across it (unless
//! both axes have length 1).
//!
//! [`edt_exact`] runs the separable squared-distance lower-envelope algorithm
//! (one column pass, one row pass; linear in the pixel count).
//! [`edt_bruteforce`] minimizes over every background pixel and is kept as
//! the reference for tests.

use crate::raster::BinaryMask;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Virtual background margins `(pad_x, pad_y)` for a `width` x `height` grid.
fn border_padding(width: usize, height: usize) -> (usize, usize) {
    match (width, height) {
        (1, 1) => (1, 1),
        (1, _) => (0, 1),
        (_, 1) => (1, 0),
        _ => (1, 1),
    }
}

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas). `f[i] = None` marks a point with no site. Writes into `out`,
/// leaving `None` where no site exists at all.
fn squared_edt_1d(
    f: &[Option<f64>],
    out: &mut [Option<f64>],
    sites: &mut Vec<usize>,
    bounds: &mut Vec<f64>,
) {
    sites.clear();
    bounds.clear();
    let parabola_cut = |q: usize, fq: f64, p: usize, fp: f64| {
        let (q, p) = (q as f64, p as f64);
        ((fq + q * q) - (fp + p * p)) / (2.0 * (q - p))
    };
    for (q, fq) in f.iter().enumerate() {
        let Some(fq) = *fq else { continue };
        while let Some(&p) = sites.last() {
            let s = parabola_cut(q, fq, p, f[p].unwrap());
            if s <= *bounds.last().unwrap() {
                sites.pop();
                bounds.pop();
            } else {
                break;
            }
        }
        let start = match sites.last() {
            None => f64::NEG_INFINITY,
            Some(&p) => parabola_cut(q, fq, p, f[p].unwrap()),
        };
        sites.push(q);
        bounds.push(start);
    }
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = None);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < sites.len() && bounds[k + 1] < qf {
            k += 1;
        }
        let p = sites[k];
        let d = qf - p as f64;
        *o = Some(d * d + f[p].unwrap());
    }
}

pub fn edt_exact(mask: &BinaryMask) -> DistanceField {
    let (w, h) = mask.dims();
    let (px, py) = border_padding(w, h);
    let (pw, ph) = (w + 2 * px, h + 2 * py);
    let is_fg = |x: usize, y: usize| {
        x >= px && x < px + w && y >= py && y < py + h && mask.get(x - px, y - py)
    };

    let mut sites = Vec::new();
    let mut bounds = Vec::new();

    // Columns: squared vertical distance to the nearest background pixel.
    let mut grid: Vec<Option<f64>> = vec![None; pw * ph];
    let mut col_in = vec![None; ph];
    let mut col_out = vec![None; ph];
    for x in 0..pw {
        for (y, c) in col_in.iter_mut().enumerate() {
            *c = if is_fg(x, y) { None } else { Some(0.0) };
        }
        squared_edt_1d(&col_in, &mut col_out, &mut sites, &mut bounds);
        for (y, v) in col_out.iter().enumerate() {
            grid[y * pw + x] = *v;
        }
    }

    // Rows: combine with horizontal offsets, keeping only the interior.
    let mut row_out = vec![None; pw];
    let mut values = Vec::with_capacity(w * h);
    for y in py..py + h {
        let row = &grid[y * pw..(y + 1) * pw];
        squared_edt_1d(row, &mut row_out, &mut sites, &mut bounds);
        for (x, v) in row_out[px..px + w].iter().enumerate() {
            let d = if mask.get(x, y - py) {
                v.expect("padding guarantees a background site").sqrt()
            } else {
                0.0
            };
            values.push(d);
        }
    }

    DistanceField {
        width: w,
        height: h,
        values,
    }
}

/// Same contract as [`edt_exact`], by exhaustive search over background pixels
/// (including the virtual border).
pub fn edt_bruteforce(mask: &BinaryMask) -> DistanceField {
    let (w, h) = mask.dims();
    let (px, py) = border_padding(w, h);
    let (px, py) = (px as i64, py as i64);
    let mut background = Vec::new();
    for y in -py..h as i64 + py {
        for x in -px..w as i64 + px {
            let inside = x >= 0 && y >= 0 && x < w as i64 && y < h as i64;
            if !inside || !mask.get(x as usize, y as usize) {
                background.push((x, y));
            }
        }
    }
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                values.push(0.0);
                continue;
            }
            let best = background
                .iter()
                .map(|&(bx, by)| {
                    let (dx, dy) = (bx - x as i64, by - y as i64);
                    dx * dx + dy * dy
                })
                .min()
                .expect("border ring is never empty");
            values.push((best as f64).sqrt());
        }
    }
    DistanceField {
        width: w,
        height: h,
        values,
    }
}
