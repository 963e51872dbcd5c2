//! Training loop, evaluation and full runs.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{draw_virtual_batch, smote_generate, AugmentationConfig, DEFAULT_SMOTE_K};
use crate::error::{FasaError, Result};
use crate::harness::data::{generate_dataset, Bin, LongTailDataset, SyntheticDataSpec};
use crate::harness::model::SoftmaxClassifier;
use crate::sampling::repeat_factor_resample;
use crate::sampling::{
    cluster_classes, default_epsilon, group_signal, AdaptationMode, ClassGrouping, Controller, InitMode,
    RepeatFactorConfig, SamplingState, SignalKind, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_FISHER_FLOOR, DEFAULT_MIN_PTS,
    DEFAULT_RFS_THRESHOLD,
};
use crate::stats::{StatisticsBank, DEFAULT_MOMENTUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    /// Real features only.
    None,
    /// Gaussian virtual features with (optionally adaptive) sampling.
    Fasa,
    /// SMOTE interpolation with static inverse-frequency sampling.
    Smote,
}

impl AugmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentMode::None => "none",
            AugmentMode::Fasa => "fasa",
            AugmentMode::Smote => "smote",
        }
    }
}

impl std::str::FromStr for AugmentMode {
    type Err = FasaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AugmentMode::None),
            "fasa" => Ok(AugmentMode::Fasa),
            "smote" => Ok(AugmentMode::Smote),
            other => Err(FasaError::invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Fraction of the epochs after which the learning rate is decayed once.
    pub lr_decay_at: f64,
    pub lr_decay_factor: f64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            learning_rate: 0.05,
            weight_decay: 5e-4,
            lr_decay_at: 0.8,
            lr_decay_factor: 0.1,
        }
    }
}

impl TrainingParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(FasaError::invalid("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(FasaError::invalid("batch_size", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FasaError::invalid("learning_rate", "must be positive and finite"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(FasaError::invalid("weight_decay", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.lr_decay_at) {
            return Err(FasaError::invalid("lr_decay_at", "must be in [0, 1]"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(FasaError::invalid("lr_decay_factor", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let decay_epoch = (self.lr_decay_at * self.epochs as f64).floor() as usize;
        if epoch >= decay_epoch {
            self.learning_rate * self.lr_decay_factor
        } else {
            self.learning_rate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentParams {
    pub momentum: f64,
    pub virt_per_success: usize,
    /// Defaults to `4 * num_classes` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_virtual_per_iter: Option<usize>,
    pub smote_k: usize,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            momentum: DEFAULT_MOMENTUM,
            virt_per_success: 1,
            max_virtual_per_iter: None,
            smote_k: DEFAULT_SMOTE_K,
        }
    }
}

impl AugmentParams {
    pub fn config_for(&self, num_classes: usize, seed: u64) -> AugmentationConfig {
        AugmentationConfig {
            virt_per_success: self.virt_per_success,
            max_virtual_per_iter: self.max_virtual_per_iter.unwrap_or(4 * num_classes.max(1)),
            rng_seed: seed,
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if !(self.momentum > 0.0 && self.momentum <= 1.0) {
            return Err(FasaError::invalid("momentum", "must be in (0, 1]"));
        }
        if self.smote_k == 0 {
            return Err(FasaError::invalid("smote_k", "must be at least 1"));
        }
        self.config_for(num_classes, 0).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    /// Adjust probabilities from validation feedback every epoch.
    pub adaptive: bool,
    pub adaptation_mode: AdaptationMode,
    pub init_mode: InitMode,
    pub signal: SignalKind,
    pub init_scale: f64,
    /// Fixed scale `s` with adaptation disabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_scale: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Regroup classes every this many epochs; 0 keeps the first grouping.
    pub recluster_every: usize,
    /// Defaults to half the median pairwise Fisher distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_epsilon: Option<f64>,
    pub cluster_min_pts: usize,
    pub fisher_floor: f64,
    /// Repeat-factor resample the validation set before computing signals.
    pub validation_rfs: bool,
    pub rfs_threshold: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            adaptive: true,
            adaptation_mode: AdaptationMode::GroupWise,
            init_mode: InitMode::InverseFrequency,
            signal: SignalKind::ValidationLoss,
            init_scale: 1.0,
            static_scale: None,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            recluster_every: 1,
            cluster_epsilon: None,
            cluster_min_pts: DEFAULT_MIN_PTS,
            fisher_floor: DEFAULT_FISHER_FLOOR,
            validation_rfs: true,
            rfs_threshold: DEFAULT_RFS_THRESHOLD,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(FasaError::invalid("init_scale", "must be positive and finite"));
        }
        if let Some(s) = self.static_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(FasaError::invalid("static_scale", "must be positive and finite"));
            }
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(FasaError::invalid("alpha", format!("{} must be > 1", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(FasaError::invalid("beta", format!("{} must be in (0, 1)", self.beta)));
        }
        if let Some(e) = self.cluster_epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(FasaError::invalid("cluster_epsilon", "must be finite and non-negative"));
            }
        }
        if self.cluster_min_pts == 0 {
            return Err(FasaError::invalid("cluster_min_pts", "must be at least 1"));
        }
        if !(self.fisher_floor >= 0.0 && self.fisher_floor.is_finite()) {
            return Err(FasaError::invalid("fisher_floor", "must be finite and non-negative"));
        }
        RepeatFactorConfig::new(self.rfs_threshold)?;
        Ok(())
    }

    /// Whether the probabilities change during training.
    pub fn is_adaptive(&self) -> bool {
        self.adaptive && self.static_scale.is_none()
    }

    pub fn initial_state(&self, class_counts: &[usize]) -> Result<SamplingState> {
        let scale = self.static_scale.unwrap_or(self.init_scale);
        Ok(SamplingState::init(class_counts, scale, self.init_mode)?
            .with_factors(self.alpha, self.beta)?
            .with_mode(self.adaptation_mode, self.signal))
    }
}

/// Where virtual features come from in one training run.
pub enum Augmenter<'a> {
    None,
    Fasa(AugmentationConfig),
    Smote {
        config: AugmentationConfig,
        k: usize,
        /// Real training features of each class.
        pools: &'a [Vec<Vec<f64>>],
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochLog {
    /// Mean of the per-iteration training losses.
    pub mean_loss: f64,
    /// Class ids of the virtual features used in each iteration.
    pub virtual_classes: Vec<Vec<usize>>,
}

/// One pass over `train` in seeded random mini-batches.
///
/// Each iteration folds the real batch into `bank`, draws virtual features
/// with the frozen probabilities `probs`, and takes one SGD step on the
/// equally weighted union of real and virtual samples.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    clf: &mut SoftmaxClassifier,
    train: &LongTailDataset,
    bank: &mut StatisticsBank,
    probs: &[f64],
    augmenter: &Augmenter<'_>,
    batch_size: usize,
    learning_rate: f64,
    shuffle_rng: &mut dyn RngCore,
    aug_rng: &mut dyn RngCore,
) -> Result<EpochLog> {
    if batch_size == 0 {
        return Err(FasaError::invalid("batch_size", "must be positive"));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(shuffle_rng);
    let mut log = EpochLog::default();
    let mut total_loss = 0.0;
    let mut iterations = 0usize;
    for chunk in order.chunks(batch_size) {
        let mut xs: Vec<&[f64]> = chunk.iter().map(|&i| train.features[i].as_slice()).collect();
        let mut ys: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
        bank.observe_batch(&xs, &ys)?;

        let virtuals = match augmenter {
            Augmenter::None => Vec::new(),
            Augmenter::Fasa(config) => draw_virtual_batch(bank, probs, config, aug_rng),
            Augmenter::Smote { config, k, pools } => {
                let mut out = Vec::new();
                'classes: for (c, (&p, pool)) in probs.iter().zip(pools.iter()).enumerate() {
                    if pool.len() < 2 || p <= 0.0 {
                        continue;
                    }
                    if p < 1.0 && aug_rng.random::<f64>() >= p {
                        continue;
                    }
                    for _ in 0..config.virt_per_success {
                        if out.len() >= config.max_virtual_per_iter {
                            break 'classes;
                        }
                        out.push(smote_generate(c, pool, *k, aug_rng)?);
                    }
                }
                out
            }
        };
        log.virtual_classes.push(virtuals.iter().map(|v| v.class_id).collect());
        for v in &virtuals {
            xs.push(&v.values);
            ys.push(v.class_id);
        }
        let (loss, grads) = clf.forward_and_loss(&xs, &ys)?;
        clf.sgd_step(&grads, learning_rate);
        total_loss += loss;
        iterations += 1;
    }
    log.mean_loss = if iterations > 0 {
        total_loss / iterations as f64
    } else {
        0.0
    };
    Ok(log)
}

/// Metrics of one evaluation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub overall_acc: f64,
    /// Accuracy per tail/mid/head bin; `None` for bins without samples.
    pub bin_acc: [Option<f64>; 3],
    /// Mean over classes of the per-class mean loss.
    pub mean_val_loss: Option<f64>,
    pub weight_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: EpochMetrics,
    pub class_loss: Vec<Option<f64>>,
    pub class_acc: Vec<Option<f64>>,
}

impl Evaluation {
    pub fn signal(&self, kind: SignalKind) -> &[Option<f64>] {
        match kind {
            SignalKind::ValidationLoss => &self.class_loss,
            SignalKind::ValidationAccuracy => &self.class_acc,
        }
    }
}

/// Evaluates `clf` on `dataset`, binning classes by `class_bins` (normally
/// derived from training counts). With an RFS config the evaluation runs
/// over the repeat-factor resampled multiset.
pub fn evaluate(
    clf: &SoftmaxClassifier,
    dataset: &LongTailDataset,
    class_bins: &[Bin],
    rfs: Option<(&RepeatFactorConfig, &mut dyn RngCore)>,
) -> Evaluation {
    let indices: Vec<usize> = match rfs {
        Some((cfg, rng)) => repeat_factor_resample(&dataset.labels, cfg, rng),
        None => (0..dataset.len()).collect(),
    };
    let c_n = clf.num_classes();
    let mut loss_sum = vec![0.0; c_n];
    let mut correct = vec![0usize; c_n];
    let mut seen = vec![0usize; c_n];
    for &i in &indices {
        let (x, y) = (&dataset.features[i], dataset.labels[i]);
        loss_sum[y] += clf.sample_loss(x, y);
        seen[y] += 1;
        if clf.predict(x) == y {
            correct[y] += 1;
        }
    }
    let class_loss: Vec<Option<f64>> = (0..c_n)
        .map(|c| (seen[c] > 0).then(|| loss_sum[c] / seen[c] as f64))
        .collect();
    let class_acc: Vec<Option<f64>> = (0..c_n)
        .map(|c| (seen[c] > 0).then(|| correct[c] as f64 / seen[c] as f64))
        .collect();
    let total_seen: usize = seen.iter().sum();
    let total_correct: usize = correct.iter().sum();
    let overall_acc = if total_seen > 0 {
        total_correct as f64 / total_seen as f64
    } else {
        0.0
    };
    let mut bin_acc = [None; 3];
    for bin in Bin::ALL {
        let (mut s, mut k) = (0usize, 0usize);
        for c in (0..c_n).filter(|&c| class_bins[c] == bin) {
            s += seen[c];
            k += correct[c];
        }
        if s > 0 {
            bin_acc[bin.index()] = Some(k as f64 / s as f64);
        }
    }
    let present: Vec<f64> = class_loss.iter().flatten().copied().collect();
    let mean_val_loss = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
    Evaluation {
        metrics: EpochMetrics {
            epoch: 0,
            overall_acc,
            bin_acc,
            mean_val_loss,
            weight_norms: clf.weight_norms(),
        },
        class_loss,
        class_acc,
    }
}

/// Everything one seeded training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: SyntheticDataSpec,
    pub training: TrainingParams,
    pub augmentation: AugmentParams,
    pub controller: ControllerParams,
    pub mode: AugmentMode,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.training.validate()?;
        self.augmentation.validate(self.data.num_classes)?;
        self.controller.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub epoch: usize,
    pub class_id: usize,
    pub group_id: usize,
    pub prob: f64,
    pub group_signal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: AugmentMode,
    pub seed: u64,
    pub train_counts: Vec<usize>,
    pub group_thresholds: [usize; 2],
    /// Validation metrics after every epoch.
    pub epochs: Vec<EpochMetrics>,
    /// Probabilities after each epoch's adjustment; empty for mode `none`.
    pub trajectory: Vec<TrajectoryRow>,
    /// Final evaluation on the balanced test split.
    pub test: EpochMetrics,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const SHUFFLE_STREAM: u64 = 16;
const AUGMENT_STREAM: u64 = 17;
const RFS_STREAM: u64 = 18;

/// Runs the full loop: train an epoch, evaluate on validation, adjust the
/// sampling probabilities, repeat; then evaluate on test.
pub fn run_training(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let data_spec = SyntheticDataSpec {
        seed: config.seed,
        ..config.data.clone()
    };
    let splits = generate_dataset(&data_spec)?;
    let (train, val, test) = (&splits.train, &splits.val, &splits.test);
    let num_classes = train.num_classes;
    let class_bins = train.class_bins();

    let mut clf = SoftmaxClassifier::new(num_classes, train.dim, config.training.weight_decay)?;
    let mut bank = StatisticsBank::new(num_classes, train.dim, config.augmentation.momentum)?;
    let state = config.controller.initial_state(&train.class_counts)?;
    let mut controller = Controller::new(state);
    let adaptive = config.mode == AugmentMode::Fasa && config.controller.is_adaptive();
    let aug_config = config.augmentation.config_for(num_classes, config.seed);
    let pools: Vec<Vec<Vec<f64>>> = match config.mode {
        AugmentMode::Smote => train
            .class_indices()
            .into_iter()
            .map(|idx| idx.into_iter().map(|i| train.features[i].clone()).collect())
            .collect(),
        _ => Vec::new(),
    };
    let augmenter = match config.mode {
        AugmentMode::None => Augmenter::None,
        AugmentMode::Fasa => Augmenter::Fasa(aug_config),
        AugmentMode::Smote => Augmenter::Smote {
            config: aug_config,
            k: config.augmentation.smote_k,
            pools: &pools,
        },
    };
    let rfs = config
        .controller
        .validation_rfs
        .then(|| RepeatFactorConfig::new(config.controller.rfs_threshold))
        .transpose()?;

    let mut shuffle_rng = stream(config.seed, SHUFFLE_STREAM);
    let mut aug_rng = stream(config.seed, AUGMENT_STREAM);
    let mut rfs_rng = stream(config.seed, RFS_STREAM);

    let mut epochs = Vec::with_capacity(config.training.epochs);
    let mut trajectory = Vec::new();
    for epoch in 0..config.training.epochs {
        let probs = controller.state.probs().to_vec();
        train_epoch(
            &mut clf,
            train,
            &mut bank,
            &probs,
            &augmenter,
            config.training.batch_size,
            config.training.learning_rate_at(epoch),
            &mut shuffle_rng,
            &mut aug_rng,
        )?;
        let eval = evaluate(
            &clf,
            val,
            &class_bins,
            rfs.as_ref().map(|cfg| (cfg, &mut rfs_rng as &mut dyn RngCore)),
        );
        let per_class = eval.signal(config.controller.signal).to_vec();

        if config.mode != AugmentMode::None {
            let (keyed, signals) = if adaptive {
                let regroup = config.controller.adaptation_mode == AdaptationMode::GroupWise
                    && config.controller.recluster_every > 0
                    && epoch % config.controller.recluster_every == 0;
                let grouping = regroup.then(|| {
                    let floor = config.controller.fisher_floor;
                    let eps = config
                        .controller
                        .cluster_epsilon
                        .or_else(|| default_epsilon(&bank, floor))
                        .unwrap_or(0.0);
                    cluster_classes(&bank, eps, config.controller.cluster_min_pts, floor)
                });
                let signals = controller.step(&per_class, grouping);
                let keyed = match config.controller.adaptation_mode {
                    AdaptationMode::GroupWise => controller.grouping.clone(),
                    AdaptationMode::ClassWise => ClassGrouping::singletons(num_classes),
                };
                (keyed, signals)
            } else {
                let keyed = ClassGrouping::singletons(num_classes);
                let signals = group_signal(&per_class, &keyed);
                (keyed, signals)
            };
            let assignment = keyed.assignment();
            for (c, &p) in controller.state.probs().iter().enumerate() {
                trajectory.push(TrajectoryRow {
                    epoch,
                    class_id: c,
                    group_id: assignment[c],
                    prob: p,
                    group_signal: signals[assignment[c]],
                });
            }
        }
        epochs.push(EpochMetrics { epoch, ..eval.metrics });
    }

    let final_eval = evaluate(&clf, test, &class_bins, None);
    Ok(RunReport {
        mode: config.mode,
        seed: config.seed,
        train_counts: train.class_counts.clone(),
        group_thresholds: train.group_thresholds,
        epochs,
        trajectory,
        test: EpochMetrics {
            epoch: config.training.epochs,
            ..final_eval.metrics
        },
    })
}
