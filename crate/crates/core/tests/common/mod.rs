//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the code under test.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A seeded stream of random mini-batches: `(features, labels)` per batch.
pub fn random_stream(
    seed: u64,
    classes: usize,
    dim: usize,
    batches: usize,
    max_batch: usize,
) -> Vec<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..batches)
        .map(|_| {
            let n = rng.random_range(0..=max_batch);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
            let feats: Vec<Vec<f64>> = labels
                .iter()
                .map(|&y| {
                    (0..dim)
                        .map(|k| y as f64 + k as f64 * 0.1 + rng.random_range(-3.0..3.0))
                        .collect()
                })
                .collect();
            (feats, labels)
        })
        .collect()
}

/// Scalar replay of the momentum recurrence for one class and coordinate.
/// Returns `(mean, std, initialized)`.
pub fn replay_ema(stream: &[(Vec<Vec<f64>>, Vec<usize>)], class: usize, coord: usize, m: f64) -> (f64, f64, bool) {
    let (mut mean, mut std, mut init) = (0.0, 0.0, false);
    for (feats, labels) in stream {
        let vals: Vec<f64> = feats
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == class)
            .map(|(x, _)| x[coord])
            .collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let mut bm = 0.0;
        for v in &vals {
            bm += v;
        }
        bm /= n;
        let mut var = 0.0;
        for v in &vals {
            var += (v - bm) * (v - bm);
        }
        let bs = (var / n).sqrt();
        if !init {
            mean = bm;
            std = bs;
            init = true;
        } else {
            mean = (1.0 - m) * mean + m * bm;
            if vals.len() >= 2 {
                std = (1.0 - m) * std + m * bs;
            }
        }
    }
    (mean, std, init)
}

/// Brute-force DBSCAN over a full distance matrix.
///
/// Core points: at least `min_pts` points (self included) within `eps`.
/// Core components come from a transitive closure of the core adjacency;
/// each component is labelled by its smallest core index. A border point
/// joins the adjacent component with the smallest label; everything else is
/// noise. Returns the canonical partition of `ids`.
pub fn brute_force_dbscan(dist: &[Vec<f64>], eps: f64, min_pts: usize, ids: &[usize]) -> Vec<Vec<usize>> {
    let n = dist.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i][j] <= eps).count() >= min_pts)
        .collect();
    // reach[i][j]: core i and core j are density-connected
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && (i == j || dist[i][j] <= eps);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    for i in 0..n {
        if core[i] {
            label[i] = (0..n).find(|&j| reach[i][j]).unwrap();
        }
    }
    for i in 0..n {
        if !core[i] {
            let best = (0..n).filter(|&j| core[j] && dist[i][j] <= eps).map(|j| label[j]).min();
            if let Some(l) = best {
                label[i] = l;
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if label[i] == usize::MAX {
            groups.push(vec![ids[i]]);
        } else {
            clusters.entry(label[i]).or_default().push(ids[i]);
        }
    }
    groups.extend(clusters.into_values());
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    groups
}
