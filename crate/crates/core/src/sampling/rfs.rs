//! Repeat factor sampling of a labelled set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};

pub const DEFAULT_RFS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatFactorConfig {
    pub threshold: f64,
}

impl Default for RepeatFactorConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_RFS_THRESHOLD,
        }
    }
}

impl RepeatFactorConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(FasaError::invalid(
                "rfs_threshold",
                format!("{threshold} is not in (0, 1)"),
            ));
        }
        Ok(Self { threshold })
    }
}

/// `r_c = max(1, sqrt(t / f_c))` for every class id up to the largest label;
/// classes without samples get `None`.
pub fn repeat_factors(labels: &[usize], config: &RepeatFactorConfig) -> Vec<Option<f64>> {
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let total = labels.len() as f64;
    counts
        .into_iter()
        .map(|n| {
            (n > 0).then(|| {
                let freq = n as f64 / total;
                (config.threshold / freq).sqrt().max(1.0)
            })
        })
        .collect()
}

/// Indices of the resampled multiset, in ascending index order.
///
/// Each sample appears `floor(r_c)` times, plus once more with probability
/// `frac(r_c)`. The generator is only consulted for fractional factors.
pub fn repeat_factor_resample<R: Rng + ?Sized>(
    labels: &[usize],
    config: &RepeatFactorConfig,
    rng: &mut R,
) -> Vec<usize> {
    let factors = repeat_factors(labels, config);
    let mut out = Vec::with_capacity(labels.len());
    for (i, &y) in labels.iter().enumerate() {
        let r = factors[y].expect("every label has a factor");
        let whole = r.floor();
        let frac = r - whole;
        let mut reps = whole as usize;
        if frac > 0.0 && rng.random::<f64>() < frac {
            reps += 1;
        }
        out.extend(std::iter::repeat_n(i, reps));
    }
    out
}
