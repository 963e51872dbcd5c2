//! Fisher-ratio distance between class statistics and DBSCAN super-groups.

use crate::error::{FasaError, Result};
use crate::stats::{ClassStatistics, StatisticsBank};

/// Floor added to the summed variances in [`fisher_distance`].
pub const DEFAULT_FISHER_FLOOR: f64 = 1e-8;

/// Density threshold used when none is configured.
pub const DEFAULT_MIN_PTS: usize = 2;

/// Partition of the class ids `0..C` into disjoint groups.
///
/// Groups are ordered by their smallest member and each group is sorted, so
/// equal partitions compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrouping {
    pub groups: Vec<Vec<usize>>,
    pub epsilon: f64,
    pub min_pts: usize,
}

impl ClassGrouping {
    pub fn singletons(num_classes: usize) -> Self {
        Self {
            groups: (0..num_classes).map(|c| vec![c]).collect(),
            epsilon: 0.0,
            min_pts: 1,
        }
    }

    /// Builds a grouping from explicit groups, checking that they partition
    /// `0..num_classes`.
    pub fn from_groups(mut groups: Vec<Vec<usize>>, num_classes: usize) -> Result<Self> {
        let mut seen = vec![false; num_classes];
        for g in &groups {
            if g.is_empty() {
                return Err(FasaError::invalid("groups", "empty group"));
            }
            for &c in g {
                if c >= num_classes {
                    return Err(FasaError::ClassOutOfRange {
                        class_id: c,
                        num_classes,
                    });
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(FasaError::invalid("groups", format!("class {c} appears twice")));
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(FasaError::invalid("groups", format!("class {c} is not covered")));
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        Ok(Self {
            groups,
            epsilon: 0.0,
            min_pts: 1,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Group id of every class.
    pub fn assignment(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_classes()];
        for (g, members) in self.groups.iter().enumerate() {
            for &c in members {
                out[c] = g;
            }
        }
        out
    }
}

/// `sum_k (mean_a[k] - mean_b[k])^2 / (std_a[k]^2 + std_b[k]^2 + floor)`.
pub fn fisher_distance(a: &ClassStatistics, b: &ClassStatistics, floor: f64) -> Result<f64> {
    if a.dim() != b.dim() || a.std.len() != b.std.len() {
        return Err(FasaError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(a.mean
        .iter()
        .zip(&b.mean)
        .zip(a.std.iter().zip(&b.std))
        .map(|((ma, mb), (sa, sb))| {
            let diff = ma - mb;
            diff * diff / (sa * sa + sb * sb + floor)
        })
        .sum())
}

fn initialized_ids(bank: &StatisticsBank) -> Vec<usize> {
    bank.classes()
        .iter()
        .filter(|s| s.initialized)
        .map(|s| s.class_id)
        .collect()
}

fn distance_matrix(bank: &StatisticsBank, ids: &[usize], floor: f64) -> Vec<Vec<f64>> {
    let classes = bank.classes();
    let n = ids.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            // same bank, so dimensions always agree
            let d =
                fisher_distance(&classes[ids[i]], &classes[ids[j]], floor).expect("bank classes share one dimension");
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    dist
}

/// Half the median pairwise Fisher distance between initialized classes.
///
/// Returns `None` when fewer than two classes are initialized.
pub fn default_epsilon(bank: &StatisticsBank, floor: f64) -> Option<f64> {
    let ids = initialized_ids(bank);
    let dist = distance_matrix(bank, &ids, floor);
    let mut pairs: Vec<f64> = (0..ids.len())
        .flat_map(|i| ((i + 1)..ids.len()).map(move |j| (i, j)))
        .map(|(i, j)| dist[i][j])
        .collect();
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(f64::total_cmp);
    let n = pairs.len();
    let median = if n % 2 == 1 {
        pairs[n / 2]
    } else {
        0.5 * (pairs[n / 2 - 1] + pairs[n / 2])
    };
    Some(0.5 * median)
}

/// Groups classes with DBSCAN over the Fisher-ratio distance.
///
/// A class is a core point when at least `min_pts` classes (itself included)
/// lie within `epsilon`. Clusters are grown from core points in ascending
/// class id; a border class joins the first cluster that reaches it. Noise
/// and uninitialized classes become singleton groups.
pub fn cluster_classes(bank: &StatisticsBank, epsilon: f64, min_pts: usize, floor: f64) -> ClassGrouping {
    let ids = initialized_ids(bank);
    let dist = distance_matrix(bank, &ids, floor);
    let n = ids.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i][j] <= epsilon).collect())
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if !is_core[seed] || label[seed].is_some() {
            continue;
        }
        let cid = clusters.len();
        let mut members = Vec::new();
        let mut queue = std::collections::VecDeque::from([seed]);
        label[seed] = Some(cid);
        while let Some(p) = queue.pop_front() {
            members.push(ids[p]);
            if !is_core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if label[q].is_none() {
                    label[q] = Some(cid);
                    queue.push_back(q);
                }
            }
        }
        clusters.push(members);
    }

    let mut groups = clusters;
    for (i, l) in label.iter().enumerate() {
        if l.is_none() {
            groups.push(vec![ids[i]]);
        }
    }
    for s in bank.classes().iter().filter(|s| !s.initialized) {
        groups.push(vec![s.class_id]);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    ClassGrouping {
        groups,
        epsilon,
        min_pts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::BankSnapshot;

    fn stats(id: usize, mean: Vec<f64>, std: Vec<f64>) -> ClassStatistics {
        ClassStatistics {
            class_id: id,
            mean,
            std,
            observation_count: 1,
            initialized: true,
        }
    }

    fn bank_of(classes: Vec<ClassStatistics>) -> StatisticsBank {
        StatisticsBank::restore(BankSnapshot {
            version: crate::stats::SNAPSHOT_VERSION,
            dim: classes[0].mean.len(),
            momentum: 0.1,
            classes,
        })
        .unwrap()
    }

    #[test]
    fn fisher_examples() {
        let a = stats(0, vec![0.0], vec![1.0]);
        let b = stats(1, vec![2.0], vec![1.0]);
        assert_eq!(fisher_distance(&a, &b, 0.0).unwrap(), 2.0);
        assert_eq!(fisher_distance(&a, &a, 0.0).unwrap(), 0.0);
        let z0 = stats(0, vec![0.0], vec![0.0]);
        let z1 = stats(1, vec![1.0], vec![0.0]);
        let d = fisher_distance(&z0, &z1, 1e-8).unwrap();
        assert!((d - 1e8).abs() < 1e-6 * 1e8);
        assert!(d.is_finite());
        let c = stats(2, vec![0.0, 1.0], vec![1.0, 1.0]);
        assert!(fisher_distance(&a, &c, 0.0).is_err());
    }

    #[test]
    fn identical_classes_form_one_group() {
        let bank = bank_of(vec![
            stats(0, vec![1.0, 2.0], vec![0.5, 0.5]),
            stats(1, vec![1.0, 2.0], vec![0.5, 0.5]),
        ]);
        let g = cluster_classes(&bank, 0.1, 1, DEFAULT_FISHER_FLOOR);
        assert_eq!(g.groups, vec![vec![0, 1]]);
    }

    #[test]
    fn distant_classes_are_singletons() {
        // pairwise distance 100 with unit-variance-sum denominators
        let s = 0.5f64.sqrt();
        let bank = bank_of(vec![
            stats(0, vec![0.0], vec![s]),
            stats(1, vec![10.0], vec![s]),
            stats(2, vec![20.0], vec![s]),
        ]);
        let g = cluster_classes(&bank, 1.0, 1, 0.0);
        assert_eq!(g.groups, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn near_pair_clusters_far_class_alone() {
        // means 0, 1, 3 with summed variances 1: distances 1, 4, 9
        let s = 0.5f64.sqrt();
        let bank = bank_of(vec![
            stats(0, vec![0.0], vec![s]),
            stats(1, vec![1.0], vec![s]),
            stats(2, vec![3.0], vec![s]),
        ]);
        let g = cluster_classes(&bank, 2.0, 2, 0.0);
        assert_eq!(g.groups, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn border_point_joins_first_cluster() {
        // two dense 1-d runs with class 4 within reach of a core on each side
        let s = 0.5f64.sqrt();
        let means = [0.0, 0.3, 0.6, 0.9, 1.8, 2.7, 3.0, 3.3, 3.6];
        let bank = bank_of(
            means
                .iter()
                .enumerate()
                .map(|(i, &m)| stats(i, vec![m], vec![s]))
                .collect(),
        );
        let g = cluster_classes(&bank, 1.0, 4, 0.0);
        assert_eq!(g.groups, vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8]]);
    }

    #[test]
    fn uninitialized_classes_are_singletons() {
        let mut bank = StatisticsBank::new(4, 1, 0.1).unwrap();
        bank.observe_batch(&[[0.0], [0.1], [0.0]], &[0, 0, 2]).unwrap();
        let g = cluster_classes(&bank, 1e12, 1, DEFAULT_FISHER_FLOOR);
        assert_eq!(g.groups, vec![vec![0, 2], vec![1], vec![3]]);
        assert_eq!(g.assignment(), vec![0, 1, 0, 2]);
    }

    #[test]
    fn default_epsilon_is_half_median() {
        let s = 0.5f64.sqrt();
        let bank = bank_of(vec![
            stats(0, vec![0.0], vec![s]),
            stats(1, vec![1.0], vec![s]),
            stats(2, vec![3.0], vec![s]),
        ]);
        assert!((default_epsilon(&bank, 0.0).unwrap() - 2.0).abs() < 1e-12);
        let single = StatisticsBank::new(2, 1, 0.1).unwrap();
        assert_eq!(default_epsilon(&single, 0.0), None);
    }

    #[test]
    fn from_groups_validates_partition() {
        assert!(ClassGrouping::from_groups(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(ClassGrouping::from_groups(vec![vec![0]], 2).is_err());
        assert!(ClassGrouping::from_groups(vec![vec![0, 2]], 2).is_err());
        assert!(ClassGrouping::from_groups(vec![vec![], vec![0, 1]], 2).is_err());
        let g = ClassGrouping::from_groups(vec![vec![2, 1], vec![0]], 3).unwrap();
        assert_eq!(g.groups, vec![vec![0], vec![1, 2]]);
    }
}
