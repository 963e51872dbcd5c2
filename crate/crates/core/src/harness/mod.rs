//! Desk-scale long-tailed classification testbed.

mod data;
mod model;
mod train;

pub use data::{
    generate_dataset, profile_counts, Bin, DatasetSplits, LongTailDataset, SyntheticDataSpec, ValidationMode,
    DATASET_VERSION, DEFAULT_GROUP_THRESHOLDS,
};
pub use model::{Gradients, SoftmaxClassifier};
pub use train::{
    evaluate, run_training, train_epoch, AugmentMode, AugmentParams, Augmenter, ControllerParams, EpochLog,
    EpochMetrics, Evaluation, RunConfig, RunReport, TrainingParams, TrajectoryRow,
};
