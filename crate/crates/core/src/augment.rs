//! Virtual feature generation.
//!
//! Virtual features for class `c` are drawn from a diagonal Gaussian with the
//! class's running mean and std: `x = mean + std * eps`, `eps ~ N(0, I)`.
//! [`smote_generate`] is the interpolation baseline used for comparisons.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};
use crate::stats::{ClassStatistics, StatisticsBank};

/// Neighbour count for the SMOTE baseline.
pub const DEFAULT_SMOTE_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualFeature {
    pub class_id: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Virtual features emitted when a class's draw succeeds.
    pub virt_per_success: usize,
    /// Upper bound on virtual features per iteration.
    pub max_virtual_per_iter: usize,
    pub rng_seed: u64,
}

impl AugmentationConfig {
    /// Defaults for `num_classes` classes: one feature per success, at most
    /// `4 * num_classes` per iteration.
    pub fn for_classes(num_classes: usize) -> Self {
        Self {
            virt_per_success: 1,
            max_virtual_per_iter: 4 * num_classes.max(1),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.virt_per_success == 0 {
            return Err(FasaError::invalid("virt_per_success", "must be at least 1"));
        }
        if self.max_virtual_per_iter < self.virt_per_success {
            return Err(FasaError::invalid(
                "max_virtual_per_iter",
                "must be at least virt_per_success",
            ));
        }
        Ok(())
    }
}

/// `mean + std * noise`, coordinate-wise.
pub fn generate_virtual(stats: &ClassStatistics, noise: &[f64]) -> Result<VirtualFeature> {
    if !stats.initialized {
        return Err(FasaError::Uninitialized(stats.class_id));
    }
    if noise.len() != stats.dim() {
        return Err(FasaError::DimensionMismatch {
            expected: stats.dim(),
            actual: noise.len(),
        });
    }
    let values = stats
        .mean
        .iter()
        .zip(&stats.std)
        .zip(noise)
        .map(|((mu, sigma), eps)| mu + sigma * eps)
        .collect();
    Ok(VirtualFeature {
        class_id: stats.class_id,
        values,
    })
}

/// Draws this iteration's virtual batch.
///
/// Classes are visited in ascending id. Each initialized class succeeds with
/// probability `probs[c]` and then emits `virt_per_success` features. Output
/// stops once `max_virtual_per_iter` features have been produced.
pub fn draw_virtual_batch<R: Rng + ?Sized>(
    bank: &StatisticsBank,
    probs: &[f64],
    config: &AugmentationConfig,
    rng: &mut R,
) -> Vec<VirtualFeature> {
    let mut out = Vec::new();
    let mut noise = vec![0.0; bank.dim()];
    'classes: for (stats, &p) in bank.classes().iter().zip(probs) {
        if !stats.initialized || p <= 0.0 {
            continue;
        }
        if p < 1.0 && rng.random::<f64>() >= p {
            continue;
        }
        for _ in 0..config.virt_per_success {
            if out.len() >= config.max_virtual_per_iter {
                break 'classes;
            }
            for n in noise.iter_mut() {
                *n = rng.sample(StandardNormal);
            }
            out.push(generate_virtual(stats, &noise).expect("initialized class, matching dim"));
        }
    }
    out
}

/// `1 - cos(a, b)`; a zero vector is at distance 1 from everything.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

/// `lambda * anchor + (1 - lambda) * neighbour`.
pub fn interpolate(anchor: &[f64], neighbour: &[f64], lambda: f64) -> Vec<f64> {
    anchor
        .iter()
        .zip(neighbour)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect()
}

/// Indices of the `k` nearest neighbours of `pool[anchor]` by cosine
/// distance, excluding the anchor. Ties go to the lower index.
pub fn nearest_neighbours<F: AsRef<[f64]>>(pool: &[F], anchor: usize, k: usize) -> Vec<usize> {
    let a = pool[anchor].as_ref();
    let mut cands: Vec<(f64, usize)> = pool
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != anchor)
        .map(|(j, x)| (cosine_distance(a, x.as_ref()), j))
        .collect();
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    cands.into_iter().take(k).map(|(_, j)| j).collect()
}

/// One SMOTE sample for `class_id` from that class's real features.
///
/// Picks a random anchor, one of its `k` cosine nearest neighbours, and
/// interpolates with `lambda` uniform on `(0, 1]`.
pub fn smote_generate<F: AsRef<[f64]>, R: Rng + ?Sized>(
    class_id: usize,
    pool: &[F],
    k: usize,
    rng: &mut R,
) -> Result<VirtualFeature> {
    if pool.len() < 2 {
        return Err(FasaError::NotEnoughSamples(format!(
            "SMOTE needs at least 2 features for class {class_id}, got {}",
            pool.len()
        )));
    }
    if k == 0 {
        return Err(FasaError::invalid("smote_k", "must be at least 1"));
    }
    let anchor = rng.random_range(0..pool.len());
    let neighbours = nearest_neighbours(pool, anchor, k);
    let j = neighbours[rng.random_range(0..neighbours.len())];
    let lambda = 1.0 - rng.random::<f64>();
    Ok(VirtualFeature {
        class_id,
        values: interpolate(pool[anchor].as_ref(), pool[j].as_ref(), lambda),
    })
}
