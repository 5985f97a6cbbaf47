//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use manloc_core::edt::edt_bruteforce;
use manloc_core::{BinaryMask, Heatmap, LabelMap};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)).unwrap()
}

pub fn random_heatmap(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Heatmap {
    Heatmap::from_fn(w, h, |_, _| rng.random_range(0.0f32..=1.0)).unwrap()
}

/// Heatmap with values on the grid k / levels, which produces ties and keeps
/// `1 - v` exact when `levels` is a power of two.
pub fn quantized_heatmap(rng: &mut ChaCha8Rng, w: usize, h: usize, levels: u32) -> Heatmap {
    Heatmap::from_fn(w, h, |_, _| rng.random_range(0..=levels) as f32 / levels as f32).unwrap()
}

/// Overlapping random rectangles painted with labels 1..=k; every label ends
/// up with at least one pixel.
pub fn random_labelmap(rng: &mut ChaCha8Rng, w: usize, h: usize, k: u32) -> LabelMap {
    loop {
        let mut labels = vec![0u32; w * h];
        for l in 1..=k {
            let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
            let (x1, y1) = (rng.random_range(x0..w), rng.random_range(y0..h));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    labels[y * w + x] = l;
                }
            }
        }
        let m = LabelMap::new(w, h, labels).unwrap();
        if m.distinct_labels().iter().filter(|&&l| l > 0).count() == k as usize {
            return m;
        }
    }
}

/// Size-normalized distance-weighted activation, summed pixel by pixel with
/// the distances from exhaustive search.
pub fn similarity_double_loop(mask: &BinaryMask, a: &Heatmap) -> f64 {
    let d = edt_bruteforce(mask);
    let (w, h) = mask.dims();
    let mut sum = 0.0;
    let mut area = 0usize;
    for y in 0..h {
        for x in 0..w {
            sum += d.get(x, y) * f64::from(a.get(x, y));
            if mask.get(x, y) {
                area += 1;
            }
        }
    }
    sum / area as f64
}

/// Probability that a random positive outscores a random negative, ties half.
pub fn pairwise_auc(pred: &[f32], gt: &[bool]) -> f64 {
    let pos: Vec<f32> = pred.iter().zip(gt).filter(|(_, &g)| g).map(|(&p, _)| p).collect();
    let neg: Vec<f32> = pred.iter().zip(gt).filter(|(_, &g)| !g).map(|(&p, _)| p).collect();
    let mut wins = 0.0f64;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}

/// `(tp, fp, tn, fn)` by definition.
pub fn definitional_counts(pred: &[f32], gt: &[bool], tau: f64) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (&p, &g) in pred.iter().zip(gt) {
        let positive = f64::from(p) >= tau;
        if positive && g {
            c.0 += 1;
        } else if positive {
            c.1 += 1;
        } else if !g {
            c.2 += 1;
        } else {
            c.3 += 1;
        }
    }
    c
}

pub fn f1_from_counts(tp: u64, fp: u64, fnn: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fnn) as f64;
    2.0 * p * r / (p + r)
}

/// Best F1 over every distinct prediction value used as threshold.
pub fn exhaustive_best_f1(pred: &[f32], gt: &[bool]) -> f64 {
    let mut cuts: Vec<f32> = pred.to_vec();
    cuts.sort_by(f32::total_cmp);
    cuts.dedup();
    cuts.iter()
        .map(|&t| {
            let (tp, fp, _, fnn) = definitional_counts(pred, gt, f64::from(t));
            f1_from_counts(tp, fp, fnn)
        })
        .fold(0.0, f64::max)
}
