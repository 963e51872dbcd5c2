//! Online class-conditional feature statistics.
//!
//! Every call to [`StatisticsBank::observe_batch`] computes, for each class
//! present in the batch, the batch mean and population standard deviation of
//! that class's features and blends them into the running estimates with a
//! fixed momentum `m`:
//!
//! ```text
//! mean <- (1 - m) * mean + m * batch_mean
//! std  <- (1 - m) * std  + m * batch_std
//! ```
//!
//! The first observation of a class sets the running estimates directly. A
//! class seen only once in a batch updates its mean but keeps its std, since a
//! single sample carries no spread information.

use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};

/// Momentum used when none is configured.
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Schema version written into every snapshot.
pub const SNAPSHOT_VERSION: u32 = 1;

/// Running Gaussian estimate for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStatistics {
    pub class_id: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub observation_count: u64,
    pub initialized: bool,
}

impl ClassStatistics {
    fn empty(class_id: usize, dim: usize) -> Self {
        Self {
            class_id,
            mean: vec![0.0; dim],
            std: vec![0.0; dim],
            observation_count: 0,
            initialized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Per-class statistics for a fixed set of `C` classes in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsBank {
    dim: usize,
    momentum: f64,
    classes: Vec<ClassStatistics>,
}

/// Serializable form of a [`StatisticsBank`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSnapshot {
    pub version: u32,
    pub dim: usize,
    pub momentum: f64,
    pub classes: Vec<ClassStatistics>,
}

impl StatisticsBank {
    pub fn new(num_classes: usize, dim: usize, momentum: f64) -> Result<Self> {
        if num_classes == 0 {
            return Err(FasaError::invalid("num_classes", "must be positive"));
        }
        if dim == 0 {
            return Err(FasaError::invalid("dim", "must be positive"));
        }
        if !(momentum > 0.0 && momentum <= 1.0) {
            return Err(FasaError::invalid("momentum", format!("{momentum} is not in (0, 1]")));
        }
        let classes = (0..num_classes).map(|c| ClassStatistics::empty(c, dim)).collect();
        Ok(Self { dim, momentum, classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn classes(&self) -> &[ClassStatistics] {
        &self.classes
    }

    pub fn get(&self, class_id: usize) -> Result<&ClassStatistics> {
        self.classes.get(class_id).ok_or(FasaError::ClassOutOfRange {
            class_id,
            num_classes: self.classes.len(),
        })
    }

    /// Folds one mini-batch of real features into the running statistics.
    ///
    /// The whole batch is validated before anything is written, so a rejected
    /// batch leaves the bank untouched.
    pub fn observe_batch<F: AsRef<[f64]>>(&mut self, features: &[F], labels: &[usize]) -> Result<()> {
        if features.len() != labels.len() {
            return Err(FasaError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let num_classes = self.classes.len();
        for (x, &y) in features.iter().zip(labels) {
            let x = x.as_ref();
            if x.len() != self.dim {
                return Err(FasaError::DimensionMismatch {
                    expected: self.dim,
                    actual: x.len(),
                });
            }
            if y >= num_classes {
                return Err(FasaError::ClassOutOfRange {
                    class_id: y,
                    num_classes,
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(FasaError::NonFinite("feature vector"));
            }
        }

        let dim = self.dim;
        let mut sums = vec![0.0; num_classes * dim];
        let mut counts = vec![0usize; num_classes];
        for (x, &y) in features.iter().zip(labels) {
            counts[y] += 1;
            for (s, v) in sums[y * dim..(y + 1) * dim].iter_mut().zip(x.as_ref()) {
                *s += v;
            }
        }
        let mut sq = vec![0.0; num_classes * dim];
        let means: Vec<f64> = sums
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let n = counts[i / dim];
                if n == 0 {
                    0.0
                } else {
                    s / n as f64
                }
            })
            .collect();
        for (x, &y) in features.iter().zip(labels) {
            let row = y * dim..(y + 1) * dim;
            for ((acc, mu), v) in sq[row.clone()].iter_mut().zip(&means[row]).zip(x.as_ref()) {
                let diff = v - mu;
                *acc += diff * diff;
            }
        }

        let m = self.momentum;
        for (c, stats) in self.classes.iter_mut().enumerate() {
            let n = counts[c];
            if n == 0 {
                continue;
            }
            let row = c * dim..(c + 1) * dim;
            let batch_mean = &means[row.clone()];
            let batch_std = sq[row].iter().map(|s| (s / n as f64).sqrt());
            if !stats.initialized {
                stats.mean.copy_from_slice(batch_mean);
                for (s, b) in stats.std.iter_mut().zip(batch_std) {
                    *s = b;
                }
                stats.initialized = true;
            } else {
                for (mu, b) in stats.mean.iter_mut().zip(batch_mean) {
                    *mu = (1.0 - m) * *mu + m * b;
                }
                if n >= 2 {
                    for (s, b) in stats.std.iter_mut().zip(batch_std) {
                        *s = (1.0 - m) * *s + m * b;
                    }
                }
            }
            stats.observation_count += n as u64;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> BankSnapshot {
        BankSnapshot {
            version: SNAPSHOT_VERSION,
            dim: self.dim,
            momentum: self.momentum,
            classes: self.classes.clone(),
        }
    }

    pub fn restore(snapshot: BankSnapshot) -> Result<Self> {
        let malformed = |reason: String| FasaError::Malformed {
            what: "statistics snapshot",
            reason,
        };
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(malformed(format!("unsupported version {}", snapshot.version)));
        }
        let mut bank =
            Self::new(snapshot.classes.len(), snapshot.dim, snapshot.momentum).map_err(|e| malformed(e.to_string()))?;
        for (i, stats) in snapshot.classes.iter().enumerate() {
            if stats.class_id != i {
                return Err(malformed(format!("entry {i} carries class id {}", stats.class_id)));
            }
            if stats.mean.len() != snapshot.dim || stats.std.len() != snapshot.dim {
                return Err(malformed(format!("class {i} has wrong dimension")));
            }
            if stats.mean.iter().chain(&stats.std).any(|v| !v.is_finite()) {
                return Err(malformed(format!("class {i} has non-finite values")));
            }
            if stats.std.iter().any(|s| *s < 0.0) {
                return Err(malformed(format!("class {i} has negative std")));
            }
            if !stats.initialized && stats.observation_count != 0 {
                return Err(malformed(format!("class {i} is uninitialized but has observations")));
            }
        }
        bank.classes = snapshot.classes;
        Ok(bank)
    }

    /// Deterministic JSON encoding of [`Self::snapshot`].
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.snapshot()).expect("snapshot is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snapshot: BankSnapshot = serde_json::from_str(text).map_err(|e| FasaError::Malformed {
            what: "statistics snapshot",
            reason: e.to_string(),
        })?;
        Self::restore(snapshot)
    }
}
