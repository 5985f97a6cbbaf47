//! Batch execution over a manifest, with per-image artifacts and an aggregate
//! fused-vs-refined comparison.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! metrics.csv           refined-map metrics, one row per evaluated image
//! metrics_fused.csv     same columns for the fused map
//! summary.json          aggregate comparison and failure list
//! images/<id>/{fused,refined}.{png,f32}
//! images/<id>/scores.csv
//! images/<id>/debug/... (only with `dump_intermediates`)
//! ```
//!
//! Images run on a bounded rayon pool; results are collected in manifest order,
//! so every output is identical for any worker count.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{roc_auc_pooled, ConfusionCounts, EvalReport};
use crate::raster::{save_heatmap, save_labelmap, save_mask, HeatmapFormat};
use crate::regions::RegionScore;

use super::config::{Aggregation, RunConfig};
use super::manifest::ManifestRecord;
use super::run::{run_image, ImageOutcome};

pub const METRICS_CSV_HEADER: &str =
    "image_id,auc,f1,precision,recall,threshold,selected_label,fallback_flag";

#[derive(Clone, Debug, Default)]
pub struct BatchOptions {
    pub out_dir: PathBuf,
    /// Write resampled activations, the resampled label map and the selected mask.
    pub dump_intermediates: bool,
    /// When set, only these image ids are processed.
    pub allowlist: Option<HashSet<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub selected_label: Option<u32>,
    pub fallback: bool,
    pub fused: Option<EvalReport>,
    pub refined: Option<EvalReport>,
    pub scores: Vec<RegionScore>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub image_id: String,
    pub error: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    /// `None` if no evaluated image had a two-class ground truth.
    pub auc: Option<f64>,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub images: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub fallbacks: usize,
    pub evaluated: usize,
    pub aggregation: Aggregation,
    pub threshold: f64,
    pub fused: Option<AggregateMetrics>,
    pub refined: Option<AggregateMetrics>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug)]
pub struct BatchReport {
    pub images: Vec<ImageSummary>,
    pub summary: BatchSummary,
}

impl BatchReport {
    pub fn failures(&self) -> &[Failure] {
        &self.summary.failures
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate<'a>(
    outcomes: &'a [ImageOutcome],
    mode: Aggregation,
    pick: impl Fn(&'a ImageOutcome) -> (Option<&'a EvalReport>, &'a crate::raster::Heatmap),
) -> Result<Option<AggregateMetrics>> {
    let evaluated: Vec<_> = outcomes
        .iter()
        .filter_map(|o| {
            let (report, map) = pick(o);
            Some((report?, map, o.gt.as_ref()?))
        })
        .collect();
    if evaluated.is_empty() {
        return Ok(None);
    }
    let metrics = match mode {
        Aggregation::Macro => AggregateMetrics {
            auc: mean(evaluated.iter().filter_map(|(r, _, _)| r.auc)),
            f1: mean(evaluated.iter().map(|(r, _, _)| r.f1)).unwrap_or(0.0),
            precision: mean(evaluated.iter().map(|(r, _, _)| r.precision)).unwrap_or(0.0),
            recall: mean(evaluated.iter().map(|(r, _, _)| r.recall)).unwrap_or(0.0),
        },
        Aggregation::Micro => {
            let counts = evaluated
                .iter()
                .fold(ConfusionCounts::default(), |acc, (r, _, _)| acc + r.counts);
            let auc = match roc_auc_pooled(evaluated.iter().map(|(_, m, g)| (*m, *g))) {
                Ok(a) => Some(a),
                Err(Error::DegenerateGroundTruth) => None,
                Err(e) => return Err(e),
            };
            AggregateMetrics {
                auc,
                f1: counts.f1(),
                precision: counts.precision(),
                recall: counts.recall(),
            }
        }
    };
    Ok(Some(metrics))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn metrics_csv(images: &[ImageSummary], pick: impl Fn(&ImageSummary) -> Option<&EvalReport>) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for img in images {
        let Some(r) = pick(img) else { continue };
        let auc = r.auc.map(|a| a.to_string()).unwrap_or_default();
        let label = img.selected_label.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{auc},{},{},{},{},{label},{}",
            csv_field(&img.image_id),
            r.f1,
            r.precision,
            r.recall,
            r.threshold,
            img.fallback
        )
        .unwrap();
    }
    out
}

fn scores_csv(scores: &[RegionScore]) -> String {
    let mut out = String::from("label,area,score\n");
    for s in scores {
        writeln!(out, "{},{},{}", s.label, s.area, s.score).unwrap();
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_image_artifacts(o: &ImageOutcome, opts: &BatchOptions) -> Result<()> {
    let dir = opts.out_dir.join("images").join(&o.image_id);
    create_dir(&dir)?;
    for (name, map) in [("fused", &o.fused), ("refined", &o.refined)] {
        for fmt in [HeatmapFormat::Png16, HeatmapFormat::F32raw] {
            save_heatmap(map, dir.join(format!("{name}.{}", fmt.extension())), fmt)?;
        }
    }
    let scores = o.selection.as_ref().map(|s| s.scores.as_slice()).unwrap_or(&[]);
    write_file(&dir.join("scores.csv"), &scores_csv(scores))?;

    if opts.dump_intermediates {
        let debug = dir.join("debug");
        create_dir(&debug)?;
        for (i, a) in o.intermediates.activations.iter().enumerate() {
            save_heatmap(a, debug.join(format!("activation_{i}.f32")), HeatmapFormat::F32raw)?;
        }
        save_labelmap(&o.intermediates.labels, debug.join("labels.png"))?;
        if let Some(sel) = &o.selection {
            save_mask(&sel.mask, debug.join("selected_mask.png"))?;
        }
        if let Some(gt) = &o.gt {
            save_mask(gt, debug.join("gt.png"))?;
        }
    }
    Ok(())
}

/// Runs every record, isolating per-image failures. Errors are returned only
/// when the batch-level outputs cannot be written.
pub fn run_batch(records: &[ManifestRecord], cfg: &RunConfig, opts: &BatchOptions) -> Result<BatchReport> {
    cfg.validate()?;
    create_dir(&opts.out_dir)?;
    let selected: Vec<&ManifestRecord> = records
        .iter()
        .filter(|r| opts.allowlist.as_ref().is_none_or(|ids| ids.contains(&r.image_id)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<std::result::Result<ImageOutcome, Failure>> = pool.install(|| {
        selected
            .par_iter()
            .map(|rec| {
                run_image(rec, cfg)
                    .and_then(|o| {
                        write_image_artifacts(&o, opts)
                            .map_err(|e| e.at_stage(&rec.image_id, "write"))?;
                        Ok(o)
                    })
                    .map_err(|e| Failure {
                        image_id: rec.image_id.clone(),
                        error: e.to_string(),
                    })
            })
            .collect()
    });

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }

    let images: Vec<ImageSummary> = outcomes
        .iter()
        .map(|o| ImageSummary {
            image_id: o.image_id.clone(),
            selected_label: o.selected_label(),
            fallback: o.fallback,
            fused: o.fused_eval,
            refined: o.refined_eval,
            scores: o
                .selection
                .as_ref()
                .map(|s| s.scores.clone())
                .unwrap_or_default(),
        })
        .collect();

    let summary = BatchSummary {
        images: selected.len(),
        succeeded: outcomes.len(),
        failed: failures.len(),
        fallbacks: outcomes.iter().filter(|o| o.fallback).count(),
        evaluated: outcomes.iter().filter(|o| o.refined_eval.is_some()).count(),
        aggregation: cfg.aggregation,
        threshold: cfg.threshold,
        fused: aggregate(&outcomes, cfg.aggregation, |o| (o.fused_eval.as_ref(), &o.fused))?,
        refined: aggregate(&outcomes, cfg.aggregation, |o| (o.refined_eval.as_ref(), &o.refined))?,
        failures,
    };

    write_file(
        &opts.out_dir.join("metrics.csv"),
        &metrics_csv(&images, |i| i.refined.as_ref()),
    )?;
    write_file(
        &opts.out_dir.join("metrics_fused.csv"),
        &metrics_csv(&images, |i| i.fused.as_ref()),
    )?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(&opts.out_dir.join("summary.json"), &json)?;

    Ok(BatchReport { images, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn mean_of_nothing() {
        assert_eq!(mean(std::iter::empty()), None);
        assert_eq!(mean([1.0, 2.0].into_iter()), Some(1.5));
    }
}
