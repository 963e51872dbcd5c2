//! Adaptive feature augmentation and sampling for long-tailed classification.
//!
//! The crate is organised around the training loop it plugs into:
//!
//! * [`stats`] keeps online per-class feature means and standard deviations.
//! * [`augment`] draws class-conditional virtual features from those
//!   statistics (plus a SMOTE interpolation baseline).
//! * [`sampling`] owns the per-class virtual-feature sampling probabilities,
//!   groups classes by a Fisher-ratio distance and adjusts probabilities from
//!   validation feedback.
//! * [`harness`] is a small synthetic long-tailed benchmark with a linear
//!   softmax classifier used to exercise the method end to end.
//! * [`experiment`] parses experiment configs, runs seeded suites and writes
//!   CSV reports.

pub mod augment;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod sampling;
pub mod stats;

pub use error::{FasaError, Result};
