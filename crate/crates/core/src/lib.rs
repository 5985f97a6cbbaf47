//! Weakly-supervised manipulation localization downstream of the networks.
//!
//! The crate takes per-scale activation heatmaps and a segmentation label map,
//! and produces a refined localization map:
//!
//! 1. [`fusion::fuse_geometric`] combines the per-scale maps by geometric mean.
//! 2. [`regions::extract_regions`] splits the label map into binary masks.
//! 3. [`regions::select_best_region`] scores each mask by its distance-weighted
//!    activation ([`regions::similarity`], built on [`edt::edt_exact`]) and keeps
//!    the best one.
//! 4. [`bayes::refine_bayes`] updates the fused map per pixel, using membership
//!    in the selected mask as evidence.
//! 5. [`metrics`] scores the result against a ground-truth mask (ROC-AUC, F1).
//!
//! [`pipeline`] wires these stages together for manifest-driven batches and
//! includes the synthetic scenario generator.

pub mod bayes;
pub mod edt;
pub mod ela;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod regions;

pub use error::{Error, Result};
pub use raster::{BinaryMask, Heatmap, LabelMap};
