//! Resampling. Both kernels use the align-corners-false convention: output
//! pixel `i` samples input coordinate `(i + 0.5) * in / out - 0.5`.

use super::{BinaryMask, Heatmap, LabelMap};
use crate::error::{Error, Result};

fn check_target(out_w: usize, out_h: usize) -> Result<()> {
    if out_w == 0 || out_h == 0 {
        Err(Error::InvalidParameter(format!(
            "resize target must be at least 1x1, got {out_w}x{out_h}"
        )))
    } else {
        Ok(())
    }
}

/// Lower tap index and interpolation weight for each output position.
fn bilinear_taps(in_len: usize, out_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    let max = (in_len - 1) as f64;
    (0..out_len)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(in_len - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

/// Source index for each output position; integer arithmetic, so exact.
fn nearest_taps(in_len: usize, out_len: usize) -> Vec<usize> {
    (0..out_len)
        .map(|i| ((2 * i + 1) * in_len / (2 * out_len)).min(in_len - 1))
        .collect()
}

fn resample_nearest<T: Copy>(
    src: &[T],
    in_w: usize,
    in_h: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<T> {
    let xs = nearest_taps(in_w, out_w);
    let ys = nearest_taps(in_h, out_h);
    let mut out = Vec::with_capacity(out_w * out_h);
    for &sy in &ys {
        let row = &src[sy * in_w..(sy + 1) * in_w];
        out.extend(xs.iter().map(|&sx| row[sx]));
    }
    out
}

impl Heatmap {
    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Heatmap> {
        check_target(out_w, out_h)?;
        if (out_w, out_h) == self.dims() {
            return Ok(self.clone());
        }
        let xs = bilinear_taps(self.width(), out_w);
        let ys = bilinear_taps(self.height(), out_h);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let mut out = Vec::with_capacity(out_w * out_h);
        for &(y0, y1, ty) in &ys {
            for &(x0, x1, tx) in &xs {
                let at = |x: usize, y: usize| f64::from(self.get(x, y));
                let top = lerp(at(x0, y0), at(x1, y0), tx);
                let bottom = lerp(at(x0, y1), at(x1, y1), tx);
                out.push(lerp(top, bottom, ty).clamp(0.0, 1.0) as f32);
            }
        }
        Ok(Heatmap::from_raw(out_w, out_h, out))
    }
}

impl LabelMap {
    pub fn resize_nearest(&self, out_w: usize, out_h: usize) -> Result<LabelMap> {
        check_target(out_w, out_h)?;
        let labels = resample_nearest(self.labels(), self.width(), self.height(), out_w, out_h);
        LabelMap::new(out_w, out_h, labels)
    }
}

impl BinaryMask {
    pub fn resize_nearest(&self, out_w: usize, out_h: usize) -> Result<BinaryMask> {
        check_target(out_w, out_h)?;
        let bits = resample_nearest(self.bits(), self.width(), self.height(), out_w, out_h);
        BinaryMask::new(out_w, out_h, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bilinear_one_by_two_to_one_by_four() {
        let h = Heatmap::new(2, 1, vec![0.0, 1.0]).unwrap();
        let r = h.resize_bilinear(4, 1).unwrap();
        assert_eq!(r.values(), &[0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn bilinear_identity_is_bit_identical() {
        let h = Heatmap::new(3, 2, vec![0.1, 0.7, 0.3, 0.9, 0.0, 0.55]).unwrap();
        assert_eq!(h.resize_bilinear(3, 2).unwrap(), h);
    }

    #[test]
    fn zero_target_is_rejected() {
        let h = Heatmap::filled(2, 2, 0.5).unwrap();
        assert!(h.resize_bilinear(0, 2).is_err());
        let l = LabelMap::new(1, 1, vec![1]).unwrap();
        assert!(l.resize_nearest(3, 0).is_err());
    }

    #[test]
    fn nearest_checkerboard_upsamples_to_blocks() {
        let l = LabelMap::new(2, 2, vec![1, 2, 2, 1]).unwrap();
        let r = l.resize_nearest(4, 4).unwrap();
        #[rustfmt::skip]
        let expected = vec![
            1, 1, 2, 2,
            1, 1, 2, 2,
            2, 2, 1, 1,
            2, 2, 1, 1,
        ];
        assert_eq!(r.labels(), expected.as_slice());
    }

    #[test]
    fn nearest_identity() {
        let l = LabelMap::new(3, 2, vec![0, 4, 4, 9, 0, 1]).unwrap();
        assert_eq!(l.resize_nearest(3, 2).unwrap(), l);
        let m = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        assert_eq!(m.resize_nearest(2, 1).unwrap(), m);
    }

    proptest! {
        #[test]
        fn bilinear_constant_invariance(v in 0.0f32..=1.0, w in 1usize..9, h in 1usize..9,
                                        ow in 1usize..20, oh in 1usize..20) {
            let m = Heatmap::filled(w, h, v).unwrap();
            let r = m.resize_bilinear(ow, oh).unwrap();
            prop_assert!(r.values().iter().all(|&x| x == v));
        }

        #[test]
        fn bilinear_stays_within_input_range(
            (w, h, vals) in (1usize..7, 1usize..7).prop_flat_map(|(w, h)|
                (Just(w), Just(h), prop::collection::vec(0.0f32..=1.0, w * h))),
            ow in 1usize..15, oh in 1usize..15,
        ) {
            let m = Heatmap::new(w, h, vals).unwrap();
            let (lo, hi) = m.min_max();
            let r = m.resize_bilinear(ow, oh).unwrap();
            prop_assert!(r.values().iter().all(|&x| x >= lo && x <= hi));
        }

        #[test]
        fn nearest_never_invents_labels(
            (w, h, labels) in (1usize..7, 1usize..7).prop_flat_map(|(w, h)|
                (Just(w), Just(h), prop::collection::vec(0u32..5, w * h))),
            ow in 1usize..15, oh in 1usize..15,
        ) {
            let m = LabelMap::new(w, h, labels).unwrap();
            let before = m.distinct_labels();
            let after = m.resize_nearest(ow, oh).unwrap().distinct_labels();
            prop_assert!(after.iter().all(|l| before.contains(l)));
        }
    }
}
