use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::LikelihoodParams;
use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::metrics::DEFAULT_THRESHOLD;
use crate::raster::CANONICAL_SIZE;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean of per-image metrics.
    #[default]
    Macro,
    /// Metrics over the pooled pixels of all images.
    Micro,
}

/// Grid every raster of one image is resampled to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum TargetDims {
    /// Ground-truth dims, else source-image dims, else the canonical 384x384.
    #[default]
    Reference,
    Fixed { width: usize, height: usize },
}

/// Everything that parameterizes a run. Loadable from TOML:
///
/// ```toml
/// threshold = 0.5
/// workers = 4
/// aggregation = "macro"
///
/// [fusion]
/// epsilon = 1e-6
/// scales = [2, 3, 4]
///
/// [likelihood]
/// lambda_in = 0.9
/// lambda_out = 0.1
///
/// [target]
/// policy = "fixed"
/// width = 384
/// height = 384
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fusion: FusionConfig,
    pub likelihood: LikelihoodParams,
    pub threshold: f64,
    pub target: TargetDims,
    pub workers: usize,
    pub aggregation: Aggregation,
    /// Base seed for synthetic scenario generation.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fusion: FusionConfig::default(),
            likelihood: LikelihoodParams::default(),
            threshold: DEFAULT_THRESHOLD,
            target: TargetDims::default(),
            workers: 1,
            aggregation: Aggregation::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.fusion.validate().map_err(wrap)?;
        self.likelihood.validate().map_err(wrap)?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let TargetDims::Fixed { width, height } = self.target {
            if width == 0 || height == 0 {
                return Err(Error::Config("fixed target dims must be at least 1x1".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn fallback_dims() -> (usize, usize) {
        CANONICAL_SIZE
    }
}
