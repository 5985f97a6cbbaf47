//! Manifest-driven orchestration of the localization stages.

mod batch;
mod config;
mod manifest;
mod overlay;
mod run;
pub mod synth;

pub use batch::{
    run_batch, AggregateMetrics, BatchOptions, BatchReport, BatchSummary, Failure, ImageSummary,
    METRICS_CSV_HEADER,
};
pub use config::{Aggregation, RunConfig, TargetDims};
pub use manifest::{
    parse_manifest, parse_manifest_str, to_manifest_string, write_manifest, ManifestRecord,
    MANIFEST_VERSION,
};
pub use overlay::{colormap, render_overlay};
pub use run::{run_image, ImageOutcome, Intermediates};
