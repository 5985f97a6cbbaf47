//! Candidate regions from a label map, their distance-weighted activation
//! score, and selection of the best match.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edt::edt_exact;
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, Heatmap, LabelMap};

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: u32,
    pub mask: BinaryMask,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScore {
    pub label: u32,
    /// Pixel count of the region.
    pub area: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub label: u32,
    pub mask: BinaryMask,
    /// One entry per candidate, ascending by label.
    pub scores: Vec<RegionScore>,
}

impl Selection {
    pub fn best_score(&self) -> &RegionScore {
        self.scores
            .iter()
            .find(|s| s.label == self.label)
            .expect("selected label is always scored")
    }
}

/// One mask per distinct non-zero label, ascending by label.
pub fn extract_regions(labels: &LabelMap) -> Vec<Region> {
    let (w, h) = labels.dims();
    let mut masks: BTreeMap<u32, Vec<bool>> = BTreeMap::new();
    for (i, &l) in labels.labels().iter().enumerate() {
        if l != 0 {
            masks.entry(l).or_insert_with(|| vec![false; w * h])[i] = true;
        }
    }
    masks
        .into_iter()
        .map(|(label, bits)| Region {
            label,
            mask: BinaryMask::new(w, h, bits).expect("dims come from a valid label map"),
        })
        .collect()
}

/// Size-normalized sum of interior distance times activation:
/// `sum(D(mask) * A) / area(mask)`.
pub fn similarity(mask: &BinaryMask, activation: &Heatmap) -> Result<f64> {
    ensure_same_dims(activation.dims(), mask.dims())?;
    let area = mask.area();
    if area == 0 {
        return Err(Error::EmptyMask);
    }
    let dist = edt_exact(mask);
    let weighted: f64 = dist
        .values()
        .iter()
        .zip(activation.values())
        .map(|(&d, &a)| d * f64::from(a))
        .sum();
    Ok(weighted / area as f64)
}

/// Scores every region and keeps the highest; ties go to the smallest label.
pub fn select_best_region(regions: &[Region], activation: &Heatmap) -> Result<Selection> {
    if regions.is_empty() {
        return Err(Error::NoRegions);
    }
    let mut scored = regions
        .par_iter()
        .map(|r| {
            Ok((
                r,
                RegionScore {
                    label: r.label,
                    area: r.mask.area(),
                    score: similarity(&r.mask, activation)?,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by_key(|(_, s)| s.label);

    let mut best = 0;
    for (i, (_, s)) in scored.iter().enumerate() {
        if s.score > scored[best].1.score {
            best = i;
        }
    }
    let chosen = scored[best].0;
    Ok(Selection {
        label: chosen.label,
        mask: chosen.mask.clone(),
        scores: scored.into_iter().map(|(_, s)| s).collect(),
    })
}
