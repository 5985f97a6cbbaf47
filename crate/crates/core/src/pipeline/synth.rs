//! Seeded synthetic scenes with a known answer.
//!
//! A scene has one ground-truth region among disjoint distractor regions. Each
//! activation scale is the ground-truth mask box-blurred with a radius that
//! grows with the scale index, plus Gaussian noise. The finest scale also
//! lights up one distractor, mimicking shallow attention leaking onto the
//! background. Region labels are shuffled so the ground truth is not always
//! the smallest label.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{save_heatmap, save_labelmap, save_mask, BinaryMask, Heatmap, HeatmapFormat, LabelMap};

use super::manifest::{write_manifest, ManifestRecord};

const PLACEMENT_ATTEMPTS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Ellipse,
    Rectangle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCase {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Ground-truth shape; drawn from the seed when `None`.
    pub shape: Option<Shape>,
    pub distractors: usize,
    /// Blur radius of the finest scale; scale `i` (0-based) uses `(i + 1) * blur_radius`.
    pub blur_radius: usize,
    pub noise_sigma: f64,
    /// Activation added to one distractor on the finest scale.
    pub spurious_amplitude: f32,
    pub scales: Vec<u32>,
}

impl SyntheticCase {
    /// 128x128, three distractors, moderate blur and noise.
    pub fn standard(seed: u64) -> Self {
        SyntheticCase {
            seed,
            width: 128,
            height: 128,
            shape: None,
            distractors: 3,
            blur_radius: 3,
            noise_sigma: 0.15,
            spurious_amplitude: 0.6,
            scales: vec![2, 3, 4],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::InvalidParameter(format!(
                "synthetic scenes need at least 4x4 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.spurious_amplitude) {
            return Err(Error::InvalidParameter(format!(
                "spurious amplitude must lie in [0, 1], got {}",
                self.spurious_amplitude
            )));
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidParameter("at least one scale is required".into()));
        }
        Ok(())
    }
}

/// `count` standard cases with seeds `base_seed, base_seed + 1, ...`.
pub fn standard_suite(count: usize, base_seed: u64) -> Vec<SyntheticCase> {
    (0..count as u64)
        .map(|i| SyntheticCase::standard(base_seed.wrapping_add(i)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub gt: BinaryMask,
    pub labels: LabelMap,
    pub gt_label: u32,
    /// One per scale, finest first.
    pub activations: Vec<Heatmap>,
    pub source: RgbImage,
}

fn rasterize(shape: Shape, w: usize, h: usize, cx: f64, cy: f64, rx: f64, ry: f64) -> Vec<bool> {
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
            bits.push(match shape {
                Shape::Ellipse => dx * dx + dy * dy <= 1.0,
                Shape::Rectangle => dx.abs() <= 1.0 && dy.abs() <= 1.0,
            });
        }
    }
    bits
}

fn random_shape(rng: &mut ChaCha8Rng) -> Shape {
    if rng.random_bool(0.5) {
        Shape::Ellipse
    } else {
        Shape::Rectangle
    }
}

/// Grows `blocked` by the 8-neighborhood of every set pixel in `bits`.
fn block_with_margin(blocked: &mut [bool], bits: &[bool], w: usize, h: usize) {
    for y in 0..h {
        for x in 0..w {
            if !bits[y * w + x] {
                continue;
            }
            for ny in y.saturating_sub(1)..(y + 2).min(h) {
                for nx in x.saturating_sub(1)..(x + 2).min(w) {
                    blocked[ny * w + nx] = true;
                }
            }
        }
    }
}

/// Separable box filter with edge replication; radius 0 is the identity.
fn box_blur(values: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let r = radius as isize;
    let norm = (2 * radius + 1) as f64;
    let pass = |src: &[f64], len: usize, count: usize, at: &dyn Fn(usize, usize) -> usize| {
        let mut out = vec![0.0; src.len()];
        for line in 0..count {
            for i in 0..len {
                let sum: f64 = (-r..=r)
                    .map(|d| src[at(line, (i as isize + d).clamp(0, len as isize - 1) as usize)])
                    .sum();
                out[at(line, i)] = sum / norm;
            }
        }
        out
    };
    let horizontal = pass(values, w, h, &|row, i| row * w + i);
    pass(&horizontal, h, w, &|col, i| i * w + col)
}

pub fn generate(case: &SyntheticCase) -> Result<SyntheticScene> {
    case.validate()?;
    let (w, h) = (case.width, case.height);
    let (wf, hf) = (w as f64, h as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let shape = case.shape.unwrap_or_else(|| random_shape(&mut rng));

    let gt_bits = (0..PLACEMENT_ATTEMPTS)
        .find_map(|_| {
            let rx = rng.random_range(0.12 * wf..=0.25 * wf).max(1.0);
            let ry = rng.random_range(0.12 * hf..=0.25 * hf).max(1.0);
            let cx = rng.random_range(rx.min(wf / 2.0)..=(wf - 1.0 - rx).max(wf / 2.0));
            let cy = rng.random_range(ry.min(hf / 2.0)..=(hf - 1.0 - ry).max(hf / 2.0));
            let bits = rasterize(shape, w, h, cx, cy, rx, ry);
            let frac = bits.iter().filter(|&&b| b).count() as f64 / (wf * hf);
            (0.01..=0.5).contains(&frac).then_some(bits)
        })
        .ok_or_else(|| {
            Error::InfeasibleGeometry(format!("cannot place a ground-truth region in {w}x{h}"))
        })?;

    let mut blocked = vec![false; w * h];
    block_with_margin(&mut blocked, &gt_bits, w, h);
    let mut distractors: Vec<Vec<bool>> = Vec::with_capacity(case.distractors);
    for k in 0..case.distractors {
        let bits = (0..PLACEMENT_ATTEMPTS)
            .find_map(|_| {
                let s = random_shape(&mut rng);
                let rx = rng.random_range(0.06 * wf..=0.14 * wf).max(1.0);
                let ry = rng.random_range(0.06 * hf..=0.14 * hf).max(1.0);
                let cx = rng.random_range(0.0..wf);
                let cy = rng.random_range(0.0..hf);
                let bits = rasterize(s, w, h, cx, cy, rx, ry);
                let fits = bits.iter().any(|&b| b)
                    && !bits.iter().zip(&blocked).any(|(&b, &blk)| b && blk);
                fits.then_some(bits)
            })
            .ok_or_else(|| {
                Error::InfeasibleGeometry(format!(
                    "cannot place distractor {} of {} disjoint from the others in {w}x{h}",
                    k + 1,
                    case.distractors
                ))
            })?;
        block_with_margin(&mut blocked, &bits, w, h);
        distractors.push(bits);
    }

    let mut ids: Vec<u32> = (1..=case.distractors as u32 + 1).collect();
    ids.shuffle(&mut rng);
    let gt_label = ids[0];
    let mut labels = vec![0u32; w * h];
    for (region, &id) in std::iter::once(&gt_bits).chain(&distractors).zip(&ids) {
        for (l, &b) in labels.iter_mut().zip(region) {
            if b {
                *l = id;
            }
        }
    }

    let spurious = (!distractors.is_empty() && case.spurious_amplitude > 0.0)
        .then(|| rng.random_range(0..distractors.len()));
    let noise = Normal::new(0.0, case.noise_sigma).expect("sigma validated");
    let mut activations = Vec::with_capacity(case.scales.len());
    for i in 0..case.scales.len() {
        let mut base: Vec<f64> = gt_bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        if let (0, Some(d)) = (i, spurious) {
            for (v, &b) in base.iter_mut().zip(&distractors[d]) {
                if b {
                    *v = f64::from(case.spurious_amplitude);
                }
            }
        }
        let blurred = box_blur(&base, w, h, (i + 1) * case.blur_radius);
        let values = blurred
            .into_iter()
            .map(|v| {
                let n = if case.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                (v + n).clamp(0.0, 1.0) as f32
            })
            .collect();
        activations.push(Heatmap::new(w, h, values)?);
    }

    let palette: Vec<[u8; 3]> = (0..=ids.len())
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    let source = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let l = labels[y as usize * w + x as usize] as usize;
        if l == 0 {
            let g = (40 + (x as usize * 120 / w) + (y as usize * 60 / h)) as u8;
            Rgb([g, g, g])
        } else {
            Rgb(palette[l])
        }
    });

    Ok(SyntheticScene {
        gt: BinaryMask::new(w, h, gt_bits)?,
        labels: LabelMap::new(w, h, labels)?,
        gt_label,
        activations,
        source,
    })
}

/// Writes a scene as `<id>.a<scale>.png`, `<id>.seg.png`, `<id>.gt.png` and
/// `<id>.src.png`, and returns its manifest record (absolute-free: paths are
/// relative to `dir`) together with the ground-truth label.
pub fn gen_synthetic(case: &SyntheticCase, image_id: &str, dir: impl AsRef<Path>) -> Result<(ManifestRecord, u32)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let scene = generate(case)?;
    let mut activation_paths = Vec::new();
    for (scale, a) in case.scales.iter().zip(&scene.activations) {
        let name = format!("{image_id}.a{scale}.png");
        save_heatmap(a, dir.join(&name), HeatmapFormat::Png16)?;
        activation_paths.push(name.into());
    }
    let seg = format!("{image_id}.seg.png");
    save_labelmap(&scene.labels, dir.join(&seg))?;
    let gt = format!("{image_id}.gt.png");
    save_mask(&scene.gt, dir.join(&gt))?;
    let src = format!("{image_id}.src.png");
    scene.source.save(dir.join(&src))?;
    Ok((
        ManifestRecord {
            image_id: image_id.to_owned(),
            activation_paths,
            labelmap_path: seg.into(),
            gt_path: Some(gt.into()),
            source_image_path: Some(src.into()),
        },
        scene.gt_label,
    ))
}

/// Generates every case into `dir` with ids `synth_<seed>`, plus
/// `manifest.jsonl` and `truth.csv` (`image_id,gt_label`).
pub fn write_suite(cases: &[SyntheticCase], dir: impl AsRef<Path>) -> Result<Vec<(ManifestRecord, u32)>> {
    let dir = dir.as_ref();
    let generated = cases
        .iter()
        .map(|c| gen_synthetic(c, &format!("synth_{:05}", c.seed), dir))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ManifestRecord> = generated.iter().map(|(r, _)| r.clone()).collect();
    write_manifest(&records, dir.join("manifest.jsonl"))?;
    let mut truth = String::from("image_id,gt_label\n");
    for (r, l) in &generated {
        writeln!(truth, "{},{l}", r.image_id).unwrap();
    }
    let path = dir.join("truth.csv");
    fs::write(&path, truth).map_err(|e| Error::io(&path, e))?;
    Ok(generated)
}
