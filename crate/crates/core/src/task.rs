//! Synthetic linear-regression task behind every node's private data.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetRole {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    /// Row-major `n x dim`.
    features: Vec<f64>,
    targets: Vec<f64>,
    dim: usize,
    pub role: DatasetRole,
}

impl ClientDataset {
    pub fn new(features: Vec<f64>, targets: Vec<f64>, dim: usize, role: DatasetRole) -> Result<Self> {
        if targets.is_empty() || dim == 0 || features.len() != targets.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: targets.len() * dim,
                actual: features.len(),
            });
        }
        Ok(Self { features, targets, dim, role })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.chunks_exact(self.dim).zip(self.targets.iter().copied())
    }

    /// Same features, negated targets.
    pub fn with_flipped_targets(&self) -> Self {
        Self {
            targets: self.targets.iter().map(|y| -y).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub dim: usize,
    pub true_weights: Vec<f64>,
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub lr: f64,
    pub local_steps: u32,
}

impl TaskSpec {
    /// Draws `true_weights` i.i.d. standard normal from `seed`.
    pub fn with_random_weights(
        dim: usize,
        noise_sigma: f64,
        n_train: usize,
        n_test: usize,
        lr: f64,
        local_steps: u32,
        seed: u64,
    ) -> Self {
        let mut rng = seed::rng(seed);
        let true_weights = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        Self { dim, true_weights, noise_sigma, n_train, n_test, lr, local_steps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("task.dim", "must be at least 1"));
        }
        if self.true_weights.len() != self.dim {
            return Err(Error::config("task.true_weights", "length must equal dim"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config("task.noise_sigma", "must be finite and >= 0"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("task.lr", "must be finite and > 0"));
        }
        if self.local_steps == 0 {
            return Err(Error::config("task.local_steps", "must be at least 1"));
        }
        if self.n_train == 0 {
            return Err(Error::config("task.n_train", "must be at least 1"));
        }
        if self.n_test == 0 {
            return Err(Error::config("task.n_test", "must be at least 1"));
        }
        Ok(())
    }
}

/// Standard normal features, `y = x . w* + N(0, sigma^2)`.
pub fn generate_client_data(task: &TaskSpec, seed: u64, role: DatasetRole) -> ClientDataset {
    let n = match role {
        DatasetRole::Train => task.n_train,
        DatasetRole::Test => task.n_test,
    };
    generate_dataset(task, seed, role, n)
}

pub fn generate_dataset(task: &TaskSpec, seed: u64, role: DatasetRole, n: usize) -> ClientDataset {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, task.noise_sigma).expect("validated sigma");
    let d = task.dim;
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend((0..d).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let clean = dot(&features[start..], &task.true_weights);
        let eps: f64 = if task.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        targets.push(clean + eps);
    }
    ClientDataset { features, targets, dim: d, role }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(weights: usize, data: &ClientDataset) -> Result<()> {
    if weights != data.dim {
        return Err(Error::DimensionMismatch { expected: data.dim, actual: weights });
    }
    Ok(())
}

/// Mean squared error of real-valued weights on any dataset.
pub fn mse_loss(weights: &[f64], data: &ClientDataset) -> Result<f64> {
    check_dim(weights.len(), data)?;
    let sum: f64 = data.rows().map(|(x, y)| (dot(x, weights) - y).powi(2)).sum();
    Ok(sum / data.len() as f64)
}

/// `(2/n) X^T (X w - y)`.
pub fn mse_gradient(weights: &[f64], data: &ClientDataset) -> Result<Vec<f64>> {
    check_dim(weights.len(), data)?;
    let mut grad = vec![0.0; data.dim];
    for (x, y) in data.rows() {
        let r = dot(x, weights) - y;
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += r * xi;
        }
    }
    let scale = 2.0 / data.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok(grad)
}

/// Full-batch gradient descent from `global` on the node's training set.
pub fn honest_train(global: &ParamVector, data: &ClientDataset, task: &TaskSpec) -> Result<ParamVector> {
    if data.role != DatasetRole::Train {
        return Err(Error::WrongDatasetRole { expected: DatasetRole::Train, actual: data.role });
    }
    check_dim(global.dim(), data)?;
    let mut w = global.dequantize();
    for _ in 0..task.local_steps {
        let grad = mse_gradient(&w, data)?;
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= task.lr * gi;
        }
    }
    ParamVector::quantize(&w)
}

/// MSE of `params` on a test set.
pub fn evaluate(params: &ParamVector, data: &ClientDataset) -> Result<f64> {
    if data.role != DatasetRole::Test {
        return Err(Error::WrongDatasetRole { expected: DatasetRole::Test, actual: data.role });
    }
    mse_loss(&params.dequantize(), data)
}
