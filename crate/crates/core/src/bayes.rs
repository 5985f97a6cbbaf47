//! Per-pixel Bayesian refinement of a fused activation map.
//!
//! The fused value `q` at a pixel is read as the prior probability that the
//! pixel is manipulated. The observation is whether the pixel lies inside the
//! selected region, with likelihoods
//! `P(inside | manipulated) = lambda_in` and
//! `P(inside | pristine) = lambda_out`. The refined value is the posterior:
//!
//! ```text
//! inside:  lambda_in q / (lambda_in q + lambda_out (1 - q))
//! outside: (1 - lambda_in) q / ((1 - lambda_in) q + (1 - lambda_out) (1 - q))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, Heatmap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LikelihoodParams {
    pub lambda_in: f64,
    pub lambda_out: f64,
}

impl Default for LikelihoodParams {
    fn default() -> Self {
        LikelihoodParams {
            lambda_in: 0.9,
            lambda_out: 0.1,
        }
    }
}

impl LikelihoodParams {
    pub fn new(lambda_in: f64, lambda_out: f64) -> Result<Self> {
        let p = LikelihoodParams {
            lambda_in,
            lambda_out,
        };
        p.validate()?;
        Ok(p)
    }

    /// Requires `0 < lambda_out <= lambda_in < 1`.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_out > 0.0
            && self.lambda_out <= self.lambda_in
            && self.lambda_in < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "likelihoods need 0 < lambda_out <= lambda_in < 1, got lambda_in={}, lambda_out={}",
                self.lambda_in, self.lambda_out
            )))
        }
    }

    /// Posterior for prior `q` given mask membership.
    pub fn posterior(&self, q: f64, inside: bool) -> f64 {
        let (l_pos, l_neg) = if inside {
            (self.lambda_in, self.lambda_out)
        } else {
            (1.0 - self.lambda_in, 1.0 - self.lambda_out)
        };
        let num = l_pos * q;
        let den = num + l_neg * (1.0 - q);
        // den == 0 only if q == 0 with l_neg == 0, which validation excludes.
        (num / den).clamp(0.0, 1.0)
    }
}

pub fn refine_bayes(prior: &Heatmap, mask: &BinaryMask, params: &LikelihoodParams) -> Result<Heatmap> {
    params.validate()?;
    ensure_same_dims(prior.dims(), mask.dims())?;
    let values = prior
        .values()
        .iter()
        .zip(mask.bits())
        .map(|(&q, &inside)| params.posterior(f64::from(q), inside) as f32)
        .collect();
    Ok(Heatmap::from_raw(prior.width(), prior.height(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_prior_inside_default_mask() {
        let p = LikelihoodParams::default();
        assert!((p.posterior(0.5, true) - 0.9).abs() < 1e-12);
        // outside: 0.1 * 0.5 / (0.1 * 0.5 + 0.9 * 0.5)
        assert!((p.posterior(0.5, false) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn certain_priors_are_fixed_points() {
        let p = LikelihoodParams::default();
        for inside in [true, false] {
            assert_eq!(p.posterior(0.0, inside), 0.0);
            assert_eq!(p.posterior(1.0, inside), 1.0);
        }
    }

    #[test]
    fn equal_likelihoods_are_identity_on_maps() {
        let p = LikelihoodParams::new(0.3, 0.3).unwrap();
        let a = Heatmap::from_fn(10, 10, |x, y| (x * 10 + y) as f32 / 99.0).unwrap();
        let m = BinaryMask::from_fn(10, 10, |x, _| x < 5).unwrap();
        assert_eq!(refine_bayes(&a, &m, &p).unwrap(), a);
    }

    #[test]
    fn rejects_bad_params_and_dims() {
        assert!(LikelihoodParams::new(0.1, 0.9).is_err());
        assert!(LikelihoodParams::new(1.0, 0.1).is_err());
        assert!(LikelihoodParams::new(0.9, 0.0).is_err());
        let a = Heatmap::filled(2, 2, 0.5).unwrap();
        let m = BinaryMask::new(1, 2, vec![true, false]).unwrap();
        assert!(refine_bayes(&a, &m, &LikelihoodParams::default()).is_err());
    }

    #[test]
    fn complement_swaps_inside_and_outside() {
        // Dyadic values keep 1 - lambda exact.
        let p = LikelihoodParams {
            lambda_in: 0.75,
            lambda_out: 0.375,
        };
        let swapped = LikelihoodParams {
            lambda_in: 1.0 - p.lambda_in,
            lambda_out: 1.0 - p.lambda_out,
        };
        for i in 0..=100 {
            let q = i as f64 / 100.0;
            assert_eq!(p.posterior(q, true), swapped.posterior(q, false));
            assert_eq!(p.posterior(q, false), swapped.posterior(q, true));
        }
    }

    #[test]
    fn evidence_moves_prior_in_the_right_direction() {
        let p = LikelihoodParams::default();
        let mut last = (-1.0, -1.0);
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            let (inside, outside) = (p.posterior(q, true), p.posterior(q, false));
            assert!(inside > q && outside < q);
            assert!(inside > last.0 && outside > last.1);
            last = (inside, outside);
        }
    }
}
