//! Linear softmax classifier trained with plain SGD.

use crate::error::{FasaError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    num_classes: usize,
    dim: usize,
    /// Row-major `C x d`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub weight_decay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Numerically stable `log(sum(exp(z)))`.
fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl SoftmaxClassifier {
    /// Zero-initialized parameters.
    pub fn new(num_classes: usize, dim: usize, weight_decay: f64) -> Result<Self> {
        if num_classes == 0 || dim == 0 {
            return Err(FasaError::invalid("classifier", "num_classes and dim must be positive"));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(FasaError::invalid("weight_decay", "must be finite and non-negative"));
        }
        Ok(Self {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            biases: vec![0.0; num_classes],
            weight_decay,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.biases)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let z = self.logits(x);
        // first maximum wins
        let mut best = 0;
        for (c, v) in z.iter().enumerate() {
            if *v > z[best] {
                best = c;
            }
        }
        best
    }

    /// Cross-entropy of one sample, without the weight penalty.
    pub fn sample_loss(&self, x: &[f64], label: usize) -> f64 {
        let z = self.logits(x);
        log_sum_exp(&z) - z[label]
    }

    /// `||W_c||_2` for every class row.
    pub fn weight_norms(&self) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .map(|w| w.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Mean cross-entropy plus `weight_decay / 2 * ||W||^2` and its exact
    /// gradient. Biases are not penalised.
    pub fn forward_and_loss<F: AsRef<[f64]>>(&self, features: &[F], labels: &[usize]) -> Result<(f64, Gradients)> {
        if features.is_empty() {
            return Err(FasaError::EmptyBatch);
        }
        if features.len() != labels.len() {
            return Err(FasaError::LengthMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let (c_n, d) = (self.num_classes, self.dim);
        let mut gw = vec![0.0; c_n * d];
        let mut gb = vec![0.0; c_n];
        let mut loss = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let x = x.as_ref();
            if x.len() != d {
                return Err(FasaError::DimensionMismatch {
                    expected: d,
                    actual: x.len(),
                });
            }
            if y >= c_n {
                return Err(FasaError::ClassOutOfRange {
                    class_id: y,
                    num_classes: c_n,
                });
            }
            let z = self.logits(x);
            let lse = log_sum_exp(&z);
            loss += lse - z[y];
            for c in 0..c_n {
                let delta = (z[c] - lse).exp() - if c == y { 1.0 } else { 0.0 };
                gb[c] += delta;
                for (g, v) in gw[c * d..(c + 1) * d].iter_mut().zip(x) {
                    *g += delta * v;
                }
            }
        }
        let n = features.len() as f64;
        loss /= n;
        let penalty: f64 = self.weights.iter().map(|w| w * w).sum();
        loss += 0.5 * self.weight_decay * penalty;
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + self.weight_decay * w;
        }
        for g in &mut gb {
            *g /= n;
        }
        Ok((
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        ))
    }

    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            *b -= learning_rate * g;
        }
    }
}
