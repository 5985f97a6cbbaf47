//! One image through the full chain: resample, fuse, extract regions, select,
//! refine, evaluate.

use crate::bayes::refine_bayes;
use crate::error::{Error, Result};
use crate::fusion::fuse_geometric;
use crate::metrics::{evaluate, EvalReport};
use crate::raster::{load_heatmap, load_labelmap, load_mask, BinaryMask, Heatmap, LabelMap};
use crate::regions::{extract_regions, select_best_region, Selection};

use super::config::{RunConfig, TargetDims};
use super::manifest::ManifestRecord;

/// Stage inputs after resampling to the working grid.
#[derive(Clone, Debug)]
pub struct Intermediates {
    pub activations: Vec<Heatmap>,
    pub labels: LabelMap,
}

#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub image_id: String,
    pub fused: Heatmap,
    pub refined: Heatmap,
    /// `None` when the label map has no regions.
    pub selection: Option<Selection>,
    /// Set when no region was available and `refined` is the fused map unchanged.
    pub fallback: bool,
    pub gt: Option<BinaryMask>,
    pub fused_eval: Option<EvalReport>,
    pub refined_eval: Option<EvalReport>,
    pub intermediates: Intermediates,
}

impl ImageOutcome {
    pub fn selected_label(&self) -> Option<u32> {
        self.selection.as_ref().map(|s| s.label)
    }
}

fn target_dims(rec: &ManifestRecord, cfg: &RunConfig, gt: Option<&BinaryMask>) -> Result<(usize, usize)> {
    if let TargetDims::Fixed { width, height } = cfg.target {
        return Ok((width, height));
    }
    if let Some(gt) = gt {
        return Ok(gt.dims());
    }
    if let Some(src) = &rec.source_image_path {
        let (w, h) = image::image_dimensions(src)?;
        return Ok((w as usize, h as usize));
    }
    Ok(RunConfig::fallback_dims())
}

pub fn run_image(rec: &ManifestRecord, cfg: &RunConfig) -> Result<ImageOutcome> {
    let id = rec.image_id.as_str();
    let staged = |stage: &'static str| move |e: Error| e.at_stage(id, stage);

    // load
    let (activations, labels, gt, dims) = (|| {
        if rec.activation_paths.len() != cfg.fusion.scales.len() {
            return Err(Error::InvalidParameter(format!(
                "{} activation maps for {} configured scales",
                rec.activation_paths.len(),
                cfg.fusion.scales.len()
            )));
        }
        let activations = rec
            .activation_paths
            .iter()
            .map(load_heatmap)
            .collect::<Result<Vec<_>>>()?;
        let labels = load_labelmap(&rec.labelmap_path)?;
        let gt = rec.gt_path.as_ref().map(load_mask).transpose()?;
        let dims = target_dims(rec, cfg, gt.as_ref())?;
        Ok((activations, labels, gt, dims))
    })()
    .map_err(staged("load"))?;

    // resample
    let (w, h) = dims;
    let (activations, labels, gt) = (|| {
        let activations = activations
            .iter()
            .map(|a| a.resize_bilinear(w, h))
            .collect::<Result<Vec<_>>>()?;
        let labels = labels.resize_nearest(w, h)?;
        let gt = gt.map(|g| g.resize_nearest(w, h)).transpose()?;
        Ok((activations, labels, gt))
    })()
    .map_err(staged("resample"))?;

    let fused = fuse_geometric(&activations, &cfg.fusion).map_err(staged("fuse"))?;

    let regions = extract_regions(&labels);
    let (selection, refined, fallback) = if regions.is_empty() {
        (None, fused.clone(), true)
    } else {
        let sel = select_best_region(&regions, &fused).map_err(staged("select"))?;
        let refined = refine_bayes(&fused, &sel.mask, &cfg.likelihood).map_err(staged("refine"))?;
        (Some(sel), refined, false)
    };

    let (fused_eval, refined_eval) = match &gt {
        Some(g) => {
            let fe = evaluate(&fused, g, cfg.threshold).map_err(staged("evaluate"))?;
            let re = evaluate(&refined, g, cfg.threshold).map_err(staged("evaluate"))?;
            (Some(fe), Some(re))
        }
        None => (None, None),
    };

    Ok(ImageOutcome {
        image_id: rec.image_id.clone(),
        fused,
        refined,
        selection,
        fallback,
        gt,
        fused_eval,
        refined_eval,
        intermediates: Intermediates {
            activations,
            labels,
        },
    })
}
