//! Per-class virtual-feature sampling probabilities and their adaptation.
//!
//! Probabilities start from the inverse class frequency (or uniform), scaled
//! by `s` and clamped to `[0, 1]`. After each validation pass, every group of
//! classes whose averaged signal improved has its probabilities multiplied by
//! `alpha` (capped at 1); every group that did not improve is multiplied by
//! `beta` (floored at 0). The first pass only records the baseline.

mod cluster;
mod rfs;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};

pub use cluster::{
    cluster_classes, default_epsilon, fisher_distance, ClassGrouping, DEFAULT_FISHER_FLOOR, DEFAULT_MIN_PTS,
};
pub use rfs::{repeat_factor_resample, repeat_factors, RepeatFactorConfig, DEFAULT_RFS_THRESHOLD};

pub const DEFAULT_ALPHA: f64 = 1.1;
pub const DEFAULT_BETA: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    InverseFrequency,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMode {
    #[default]
    GroupWise,
    ClassWise,
}

/// Which validation quantity drives the adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    #[default]
    ValidationLoss,
    ValidationAccuracy,
}

impl SignalKind {
    /// Strict improvement; a tie is not an improvement.
    pub fn improved(self, previous: f64, current: f64) -> bool {
        match self {
            SignalKind::ValidationLoss => current < previous,
            SignalKind::ValidationAccuracy => current > previous,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingState {
    probs: Vec<f64>,
    init_scale: f64,
    alpha: f64,
    beta: f64,
    adaptation_mode: AdaptationMode,
    signal: SignalKind,
    /// Previous signal keyed by group id (class id in class-wise mode).
    prev_signal: BTreeMap<usize, f64>,
}

/// Inverse-frequency weights `(1/N_c) / sum_j (1/N_j)`; they sum to one.
pub fn inverse_frequency_weights(class_counts: &[usize]) -> Result<Vec<f64>> {
    if class_counts.is_empty() {
        return Err(FasaError::invalid("class_counts", "no classes"));
    }
    if let Some(c) = class_counts.iter().position(|&n| n == 0) {
        return Err(FasaError::NotEnoughSamples(format!(
            "class {c} has no training samples"
        )));
    }
    let inv: Vec<f64> = class_counts.iter().map(|&n| 1.0 / n as f64).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|w| w / total).collect())
}

impl SamplingState {
    /// Initial probabilities from training class counts.
    pub fn init(class_counts: &[usize], init_scale: f64, mode: InitMode) -> Result<Self> {
        if !(init_scale > 0.0 && init_scale.is_finite()) {
            return Err(FasaError::invalid("init_scale", "must be positive and finite"));
        }
        let weights = match mode {
            InitMode::InverseFrequency => inverse_frequency_weights(class_counts)?,
            InitMode::Uniform => {
                // counts are still validated: every class needs a sample
                inverse_frequency_weights(class_counts)?;
                vec![1.0 / class_counts.len() as f64; class_counts.len()]
            }
        };
        let probs = weights.into_iter().map(|w| (init_scale * w).clamp(0.0, 1.0)).collect();
        Ok(Self {
            probs,
            init_scale,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            adaptation_mode: AdaptationMode::GroupWise,
            signal: SignalKind::ValidationLoss,
            prev_signal: BTreeMap::new(),
        })
    }

    /// Fixed probabilities, mostly useful for tests and static ablations.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(FasaError::invalid("probs", format!("{p} is not in [0, 1]")));
        }
        Ok(Self {
            probs,
            init_scale: 1.0,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            adaptation_mode: AdaptationMode::GroupWise,
            signal: SignalKind::ValidationLoss,
            prev_signal: BTreeMap::new(),
        })
    }

    pub fn with_factors(mut self, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(FasaError::invalid("alpha", format!("{alpha} must be > 1")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(FasaError::invalid("beta", format!("{beta} must be in (0, 1)")));
        }
        self.alpha = alpha;
        self.beta = beta;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: AdaptationMode, signal: SignalKind) -> Self {
        self.adaptation_mode = mode;
        self.signal = signal;
        self
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn adaptation_mode(&self) -> AdaptationMode {
        self.adaptation_mode
    }

    pub fn signal(&self) -> SignalKind {
        self.signal
    }

    pub fn prev_signal(&self) -> &BTreeMap<usize, f64> {
        &self.prev_signal
    }

    /// Replaces the stored reference signal, e.g. after classes were
    /// regrouped and the previous per-class signals were re-averaged.
    pub fn set_prev_signal(&mut self, prev: BTreeMap<usize, f64>) {
        self.prev_signal = prev;
    }

    /// One epoch-boundary adjustment.
    ///
    /// `current` is keyed by group id in group-wise mode and by class id in
    /// class-wise mode (where `grouping` is ignored). Groups lacking either a
    /// current or a stored previous signal are left unchanged.
    pub fn adjust_probabilities(&mut self, grouping: &ClassGrouping, current: &[Option<f64>]) {
        let singletons;
        let groups: &[Vec<usize>] = match self.adaptation_mode {
            AdaptationMode::GroupWise => &grouping.groups,
            AdaptationMode::ClassWise => {
                singletons = ClassGrouping::singletons(self.probs.len());
                &singletons.groups
            }
        };
        for (gid, members) in groups.iter().enumerate() {
            let Some(cur) = current.get(gid).copied().flatten() else {
                continue;
            };
            if let Some(&prev) = self.prev_signal.get(&gid) {
                let improved = self.signal.improved(prev, cur);
                for &c in members {
                    let p = &mut self.probs[c];
                    *p = if improved {
                        (*p * self.alpha).min(1.0)
                    } else {
                        (*p * self.beta).max(0.0)
                    };
                }
            }
            self.prev_signal.insert(gid, cur);
        }
    }
}

/// Averages per-class signals within each group, skipping classes without a
/// signal. A group where no member has a signal yields `None`.
pub fn group_signal(per_class: &[Option<f64>], grouping: &ClassGrouping) -> Vec<Option<f64>> {
    grouping
        .groups
        .iter()
        .map(|members| {
            let (sum, n) = members
                .iter()
                .filter_map(|&c| per_class.get(c).copied().flatten())
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| sum / n as f64)
        })
        .collect()
}

/// Drives a [`SamplingState`] from per-class validation signals, regrouping
/// classes as requested.
///
/// Group ids are positions in the current grouping, so when the grouping
/// changes the stored reference is recomputed from the previous per-class
/// signals over the new groups before the comparison.
#[derive(Debug, Clone)]
pub struct Controller {
    pub state: SamplingState,
    pub grouping: ClassGrouping,
    prev_class_signal: Option<Vec<Option<f64>>>,
}

impl Controller {
    pub fn new(state: SamplingState) -> Self {
        let grouping = ClassGrouping::singletons(state.num_classes());
        Self {
            state,
            grouping,
            prev_class_signal: None,
        }
    }

    /// Runs one adjustment and returns the per-group signal used.
    pub fn step(&mut self, per_class: &[Option<f64>], grouping: Option<ClassGrouping>) -> Vec<Option<f64>> {
        if let Some(g) = grouping {
            self.grouping = g;
        }
        let keyed = match self.state.adaptation_mode() {
            AdaptationMode::GroupWise => self.grouping.clone(),
            AdaptationMode::ClassWise => ClassGrouping::singletons(self.state.num_classes()),
        };
        let current = group_signal(per_class, &keyed);
        let prev = match &self.prev_class_signal {
            Some(prev) => group_signal(prev, &keyed)
                .into_iter()
                .enumerate()
                .filter_map(|(g, v)| v.map(|v| (g, v)))
                .collect(),
            None => BTreeMap::new(),
        };
        self.state.set_prev_signal(prev);
        self.state.adjust_probabilities(&keyed, &current);
        self.prev_class_signal = Some(per_class.to_vec());
        current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn init_symmetric() {
        let s = SamplingState::init(&[5, 5], 1.0, InitMode::InverseFrequency).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn init_inverse_frequency_hand_evaluated() {
        let s = SamplingState::init(&[100, 10, 1], 1.0, InitMode::InverseFrequency).unwrap();
        assert!(close(s.probs(), &[1.0 / 111.0, 10.0 / 111.0, 100.0 / 111.0], 1e-12));
        assert!(close(s.probs(), &[0.009009, 0.090090, 0.900901], 1e-6));
        let s = SamplingState::init(&[100, 10, 1], 5.0, InitMode::InverseFrequency).unwrap();
        assert!(close(s.probs(), &[0.045045, 0.450450, 1.0], 1e-6));
        assert_eq!(s.probs()[2], 1.0);
    }

    #[test]
    fn init_uniform() {
        let s = SamplingState::init(&[100, 10, 1, 7], 1.0, InitMode::Uniform).unwrap();
        assert_eq!(s.probs(), &[0.25; 4]);
        let s = SamplingState::init(&[100, 10], 3.0, InitMode::Uniform).unwrap();
        assert_eq!(s.probs(), &[1.0, 1.0]);
    }

    #[test]
    fn init_rejects_empty_class() {
        assert!(SamplingState::init(&[3, 0], 1.0, InitMode::InverseFrequency).is_err());
        assert!(SamplingState::init(&[3, 0], 1.0, InitMode::Uniform).is_err());
        assert!(SamplingState::init(&[3, 1], 0.0, InitMode::Uniform).is_err());
    }

    #[test]
    fn factor_validation() {
        let s = SamplingState::from_probs(vec![0.5]).unwrap();
        assert!(s.clone().with_factors(1.0, 0.9).is_err());
        assert!(s.clone().with_factors(1.1, 1.0).is_err());
        assert!(s.clone().with_factors(1.1, 0.0).is_err());
        assert!(s.with_factors(1.2, 0.8).is_ok());
        assert!(SamplingState::from_probs(vec![1.5]).is_err());
    }

    #[test]
    fn group_signal_mean_and_missing() {
        let g = ClassGrouping::from_groups(vec![vec![0, 1], vec![2]], 3).unwrap();
        assert_eq!(group_signal(&[Some(2.0), Some(4.0), None], &g), vec![Some(3.0), None]);
        assert_eq!(
            group_signal(&[Some(2.0), None, Some(1.0)], &g),
            vec![Some(2.0), Some(1.0)]
        );
    }

    fn one_group(p: f64) -> (SamplingState, ClassGrouping) {
        (
            SamplingState::from_probs(vec![p]).unwrap(),
            ClassGrouping::singletons(1),
        )
    }

    #[test]
    fn adjust_increase_decrease_and_tie() {
        let (mut s, g) = one_group(0.5);
        s.adjust_probabilities(&g, &[Some(2.0)]);
        assert_eq!(s.probs(), &[0.5]);
        s.adjust_probabilities(&g, &[Some(1.5)]);
        assert!((s.probs()[0] - 0.55).abs() < 1e-15);

        let (mut s, g) = one_group(0.95);
        s.adjust_probabilities(&g, &[Some(2.0)]);
        s.adjust_probabilities(&g, &[Some(1.0)]);
        assert_eq!(s.probs(), &[1.0]);

        let (mut s, g) = one_group(0.5);
        s.adjust_probabilities(&g, &[Some(1.5)]);
        s.adjust_probabilities(&g, &[Some(1.5)]);
        assert!((s.probs()[0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn adjust_accuracy_signal_direction() {
        let (s, g) = one_group(0.5);
        let mut s = s.with_mode(AdaptationMode::GroupWise, SignalKind::ValidationAccuracy);
        s.adjust_probabilities(&g, &[Some(0.4)]);
        s.adjust_probabilities(&g, &[Some(0.6)]);
        assert!((s.probs()[0] - 0.55).abs() < 1e-15);
        s.adjust_probabilities(&g, &[Some(0.5)]);
        assert!((s.probs()[0] - 0.495).abs() < 1e-15);
    }

    #[test]
    fn absent_signal_leaves_group_untouched() {
        let mut s = SamplingState::from_probs(vec![0.5, 0.2, 0.3]).unwrap();
        let g = ClassGrouping::from_groups(vec![vec![0, 1], vec![2]], 3).unwrap();
        s.adjust_probabilities(&g, &[Some(1.0), Some(1.0)]);
        s.adjust_probabilities(&g, &[Some(0.5), None]);
        assert!(close(s.probs(), &[0.55, 0.22, 0.3], 1e-15));
        // group 1 still compares against its value from the first call
        s.adjust_probabilities(&g, &[Some(0.4), Some(2.0)]);
        assert!(close(s.probs(), &[0.605, 0.242, 0.27], 1e-15));
        s.adjust_probabilities(&g, &[Some(0.4), Some(1.0)]);
        assert!(close(s.probs(), &[0.5445, 0.2178, 0.297], 1e-15));
    }

    #[test]
    fn class_wise_ignores_grouping() {
        let mut s = SamplingState::from_probs(vec![0.5, 0.5])
            .unwrap()
            .with_mode(AdaptationMode::ClassWise, SignalKind::ValidationLoss);
        let g = ClassGrouping::from_groups(vec![vec![0, 1]], 2).unwrap();
        s.adjust_probabilities(&g, &[Some(1.0), Some(1.0)]);
        s.adjust_probabilities(&g, &[Some(0.5), Some(2.0)]);
        assert!(close(s.probs(), &[0.55, 0.45], 1e-15));
    }

    #[test]
    fn controller_rekeys_previous_signal_after_regrouping() {
        let state = SamplingState::from_probs(vec![0.5, 0.5, 0.5]).unwrap();
        let mut ctl = Controller::new(state);
        let g1 = ClassGrouping::from_groups(vec![vec![0], vec![1, 2]], 3).unwrap();
        ctl.step(&[Some(1.0), Some(1.0), Some(3.0)], Some(g1));
        assert_eq!(ctl.state.probs(), &[0.5, 0.5, 0.5]);
        // regroup: {0,1} now shares a group; previous mean over {0,1} is 1.0
        let g2 = ClassGrouping::from_groups(vec![vec![0, 1], vec![2]], 3).unwrap();
        let sig = ctl.step(&[Some(0.8), Some(1.0), Some(3.5)], Some(g2));
        assert_eq!(sig, vec![Some(0.9), Some(3.5)]);
        assert!(close(ctl.state.probs(), &[0.55, 0.55, 0.45], 1e-15));
    }
}
