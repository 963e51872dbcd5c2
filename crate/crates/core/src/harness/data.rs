//! Synthetic long-tailed Gaussian-mixture datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};

pub const DATASET_VERSION: u32 = 1;

/// Count cutoffs `[mid, head]`: a class with `N < mid` training samples is
/// tail, `mid <= N < head` is mid, otherwise head.
pub const DEFAULT_GROUP_THRESHOLDS: [usize; 2] = [10, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bin {
    Tail,
    Mid,
    Head,
}

impl Bin {
    pub const ALL: [Bin; 3] = [Bin::Tail, Bin::Mid, Bin::Head];

    pub fn of(count: usize, thresholds: [usize; 2]) -> Bin {
        if count < thresholds[0] {
            Bin::Tail
        } else if count < thresholds[1] {
            Bin::Mid
        } else {
            Bin::Head
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// `val_per_class` samples for every class.
    #[default]
    Balanced,
    /// Validation counts follow the training profile scaled to
    /// `val_per_class`; tail classes may have no validation samples.
    LongTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticDataSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub head_count: usize,
    pub imbalance_ratio: f64,
    pub center_radius: f64,
    pub within_class_std: f64,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub validation: ValidationMode,
    pub group_thresholds: [usize; 2],
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SyntheticDataSpec {
    fn default() -> Self {
        Self {
            num_classes: 30,
            dim: 16,
            head_count: 500,
            imbalance_ratio: 100.0,
            center_radius: 5.0,
            within_class_std: 1.0,
            val_per_class: 20,
            test_per_class: 20,
            validation: ValidationMode::Balanced,
            group_thresholds: DEFAULT_GROUP_THRESHOLDS,
            seed: 0,
        }
    }
}

/// `round(head * ratio^(-c / (C - 1)))` for `c = 0..C`.
pub fn profile_counts(head: usize, ratio: f64, num_classes: usize) -> Vec<usize> {
    if num_classes <= 1 {
        return vec![head; num_classes];
    }
    (0..num_classes)
        .map(|c| {
            let exponent = -(c as f64) / (num_classes - 1) as f64;
            (head as f64 * ratio.powf(exponent)).round() as usize
        })
        .collect()
}

impl SyntheticDataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(FasaError::invalid("num_classes", "must be positive"));
        }
        if self.dim == 0 {
            return Err(FasaError::invalid("dim", "must be positive"));
        }
        if self.head_count == 0 {
            return Err(FasaError::invalid("head_count", "must be positive"));
        }
        if !(self.imbalance_ratio >= 1.0 && self.imbalance_ratio.is_finite()) {
            return Err(FasaError::invalid("imbalance_ratio", "must be a finite value >= 1"));
        }
        if !(self.center_radius >= 0.0 && self.center_radius.is_finite()) {
            return Err(FasaError::invalid("center_radius", "must be finite and non-negative"));
        }
        if !(self.within_class_std >= 0.0 && self.within_class_std.is_finite()) {
            return Err(FasaError::invalid(
                "within_class_std",
                "must be finite and non-negative",
            ));
        }
        if self.group_thresholds[0] >= self.group_thresholds[1] {
            return Err(FasaError::invalid("group_thresholds", "must be strictly increasing"));
        }
        if let Some(c) = self.train_counts().iter().position(|&n| n < 1) {
            return Err(FasaError::NotEnoughSamples(format!(
                "class {c} would get no training samples"
            )));
        }
        Ok(())
    }

    pub fn train_counts(&self) -> Vec<usize> {
        profile_counts(self.head_count, self.imbalance_ratio, self.num_classes)
    }

    fn val_counts(&self) -> Vec<usize> {
        match self.validation {
            ValidationMode::Balanced => vec![self.val_per_class; self.num_classes],
            ValidationMode::LongTail => profile_counts(self.val_per_class, self.imbalance_ratio, self.num_classes),
        }
    }
}

/// Labelled feature vectors for `num_classes` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTailDataset {
    pub num_classes: usize,
    pub dim: usize,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_counts: Vec<usize>,
    pub group_thresholds: [usize; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    version: u32,
    num_classes: usize,
    dim: usize,
    group_thresholds: [usize; 2],
    class_counts: Vec<usize>,
    labels: Vec<usize>,
    features: Vec<Vec<f64>>,
}

impl LongTailDataset {
    pub fn new(
        num_classes: usize,
        dim: usize,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        group_thresholds: [usize; 2],
    ) -> Result<Self> {
        let mut class_counts = vec![0; num_classes];
        for &y in &labels {
            if y >= num_classes {
                return Err(FasaError::ClassOutOfRange {
                    class_id: y,
                    num_classes,
                });
            }
            class_counts[y] += 1;
        }
        let ds = Self {
            num_classes,
            dim,
            features,
            labels,
            class_counts,
            group_thresholds,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let malformed = |reason: String| FasaError::Malformed {
            what: "dataset",
            reason,
        };
        if self.num_classes == 0 || self.dim == 0 {
            return Err(malformed("num_classes and dim must be positive".into()));
        }
        if self.features.len() != self.labels.len() {
            return Err(FasaError::LengthMismatch {
                features: self.features.len(),
                labels: self.labels.len(),
            });
        }
        if self.class_counts.len() != self.num_classes {
            return Err(malformed(format!(
                "{} class counts for {} classes",
                self.class_counts.len(),
                self.num_classes
            )));
        }
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            if y >= self.num_classes {
                return Err(FasaError::ClassOutOfRange {
                    class_id: y,
                    num_classes: self.num_classes,
                });
            }
            counts[y] += 1;
        }
        if counts != self.class_counts {
            return Err(malformed("class counts disagree with labels".into()));
        }
        for x in &self.features {
            if x.len() != self.dim {
                return Err(FasaError::DimensionMismatch {
                    expected: self.dim,
                    actual: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(FasaError::NonFinite("dataset feature"));
            }
        }
        if self.group_thresholds[0] >= self.group_thresholds[1] {
            return Err(malformed("group thresholds must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Sample indices of every class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            out[y].push(i);
        }
        out
    }

    /// Bin of every class according to this dataset's counts.
    pub fn class_bins(&self) -> Vec<Bin> {
        self.class_counts
            .iter()
            .map(|&n| Bin::of(n, self.group_thresholds))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = DatasetFile {
            version: DATASET_VERSION,
            num_classes: self.num_classes,
            dim: self.dim,
            group_thresholds: self.group_thresholds,
            class_counts: self.class_counts.clone(),
            labels: self.labels.clone(),
            features: self.features.clone(),
        };
        serde_json::to_string(&file).expect("dataset is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text).map_err(|e| FasaError::Malformed {
            what: "dataset",
            reason: e.to_string(),
        })?;
        if file.version != DATASET_VERSION {
            return Err(FasaError::Malformed {
                what: "dataset",
                reason: format!("unsupported version {}", file.version),
            });
        }
        let data = Self {
            num_classes: file.num_classes,
            dim: file.dim,
            features: file.features,
            labels: file.labels,
            class_counts: file.class_counts,
            group_thresholds: file.group_thresholds,
        };
        data.validate()?;
        Ok(data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub train: LongTailDataset,
    pub val: LongTailDataset,
    pub test: LongTailDataset,
    pub centers: Vec<Vec<f64>>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn sample_split(
    spec: &SyntheticDataSpec,
    centers: &[Vec<f64>],
    counts: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<LongTailDataset> {
    let mut features = Vec::with_capacity(counts.iter().sum());
    let mut labels = Vec::with_capacity(features.capacity());
    for (c, (&n, center)) in counts.iter().zip(centers).enumerate() {
        for _ in 0..n {
            let x: Vec<f64> = center
                .iter()
                .map(|mu| mu + spec.within_class_std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            features.push(x);
            labels.push(c);
        }
    }
    LongTailDataset::new(spec.num_classes, spec.dim, features, labels, spec.group_thresholds)
}

/// Class centres uniform on the radius-`R` sphere, isotropic Gaussian noise
/// around them. Train follows the long-tailed profile; validation and test
/// are drawn independently.
pub fn generate_dataset(spec: &SyntheticDataSpec) -> Result<DatasetSplits> {
    spec.validate()?;
    let mut center_rng = stream(spec.seed, 0);
    let centers: Vec<Vec<f64>> = (0..spec.num_classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..spec.dim)
                .map(|_| center_rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| spec.center_radius * x / norm).collect();
            }
        })
        .collect();
    let train = sample_split(spec, &centers, &spec.train_counts(), &mut stream(spec.seed, 1))?;
    let val = sample_split(spec, &centers, &spec.val_counts(), &mut stream(spec.seed, 2))?;
    let test = sample_split(
        spec,
        &centers,
        &vec![spec.test_per_class; spec.num_classes],
        &mut stream(spec.seed, 3),
    )?;
    Ok(DatasetSplits {
        train,
        val,
        test,
        centers,
    })
}
