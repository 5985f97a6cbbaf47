//! Pixel-wise evaluation against a ground-truth mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, Heatmap};

/// Default fixed decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// `num / den`, with 0/0 taken as 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp as f64, (self.tp + self.fp) as f64)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp as f64, (self.tp + self.fn_) as f64)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        ratio(2.0 * p * r, p + r)
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `None` when the ground truth has only one class.
    pub auc: Option<f64>,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub counts: ConfusionCounts,
}

impl EvalReport {
    fn from_counts(counts: ConfusionCounts, threshold: f64, auc: Option<f64>) -> Self {
        EvalReport {
            auc,
            f1: counts.f1(),
            precision: counts.precision(),
            recall: counts.recall(),
            threshold,
            counts,
        }
    }
}

/// Mann-Whitney AUC over `(score, is_positive)` pairs, with average ranks for ties.
fn auc_from_scored(mut scored: Vec<(f32, bool)>) -> Result<f64> {
    let n_pos = scored.iter().filter(|(_, p)| *p).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateGroundTruth);
    }
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; a tie block spanning ranks i+1..=j shares (i+1+j)/2.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < scored.len() {
        let mut j = i + 1;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_block = scored[i..j].iter().filter(|(_, p)| *p).count();
        rank_sum_pos += avg_rank * pos_in_block as f64;
        i = j;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok(((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn)).clamp(0.0, 1.0))
}

pub fn roc_auc(pred: &Heatmap, gt: &BinaryMask) -> Result<f64> {
    ensure_same_dims(gt.dims(), pred.dims())?;
    auc_from_scored(
        pred.values()
            .iter()
            .copied()
            .zip(gt.bits().iter().copied())
            .collect(),
    )
}

/// AUC over the union of all pixels of several images.
pub fn roc_auc_pooled<'a>(pairs: impl IntoIterator<Item = (&'a Heatmap, &'a BinaryMask)>) -> Result<f64> {
    let mut scored = Vec::new();
    for (pred, gt) in pairs {
        ensure_same_dims(gt.dims(), pred.dims())?;
        scored.extend(pred.values().iter().copied().zip(gt.bits().iter().copied()));
    }
    auc_from_scored(scored)
}

/// Confusion counts with `pred >= threshold` as the positive decision.
pub fn confusion(pred: &Heatmap, gt: &BinaryMask, threshold: f64) -> Result<ConfusionCounts> {
    ensure_same_dims(gt.dims(), pred.dims())?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.values().iter().zip(gt.bits()) {
        match (f64::from(p) >= threshold, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )))
    }
}

/// F1, precision and recall at a fixed threshold. The report's `auc` is left empty.
pub fn f1_at_threshold(pred: &Heatmap, gt: &BinaryMask, threshold: f64) -> Result<EvalReport> {
    check_threshold(threshold)?;
    Ok(EvalReport::from_counts(confusion(pred, gt, threshold)?, threshold, None))
}

/// Fixed-threshold report plus AUC when the ground truth allows one.
pub fn evaluate(pred: &Heatmap, gt: &BinaryMask, threshold: f64) -> Result<EvalReport> {
    let mut report = f1_at_threshold(pred, gt, threshold)?;
    report.auc = match roc_auc(pred, gt) {
        Ok(a) => Some(a),
        Err(Error::DegenerateGroundTruth) => None,
        Err(e) => return Err(e),
    };
    Ok(report)
}

/// Reports at `steps` thresholds spaced uniformly over `[0, 1]`.
pub fn threshold_sweep(pred: &Heatmap, gt: &BinaryMask, steps: usize) -> Result<Vec<(f64, EvalReport)>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "threshold sweep needs at least 2 steps, got {steps}"
        )));
    }
    (0..steps)
        .map(|k| {
            let tau = k as f64 / (steps - 1) as f64;
            f1_at_threshold(pred, gt, tau).map(|r| (tau, r))
        })
        .collect()
}
