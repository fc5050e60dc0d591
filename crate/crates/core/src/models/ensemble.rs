//! Bootstrap ensemble of multinomial linear classifiers.
//!
//! Each member's softmax output is one Monte Carlo sample of the predictive
//! distribution, standing in for a stochastic forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::PredictionTensor;
use crate::datasets::Dataset;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainHyper {
    #[serde(default = "TrainHyper::default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "TrainHyper::default_epochs")]
    pub epochs: usize,
    /// Bootstrap resample size as a fraction of the training set.
    #[serde(default = "TrainHyper::default_bootstrap")]
    pub bootstrap_fraction: f64,
    #[serde(default = "TrainHyper::default_l2")]
    pub l2: f64,
    /// Half-width of the uniform weight initialisation.
    #[serde(default = "TrainHyper::default_init")]
    pub init_scale: f64,
}

impl TrainHyper {
    fn default_learning_rate() -> f64 {
        0.5
    }
    fn default_epochs() -> usize {
        200
    }
    fn default_bootstrap() -> f64 {
        1.0
    }
    fn default_l2() -> f64 {
        1e-3
    }
    fn default_init() -> f64 {
        1.0
    }
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: Self::default_learning_rate(),
            epochs: Self::default_epochs(),
            bootstrap_fraction: Self::default_bootstrap(),
            l2: Self::default_l2(),
            init_scale: Self::default_init(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// `c x dim`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub dim: usize,
}

impl LinearClassifier {
    pub fn n_classes(&self) -> usize {
        self.biases.len()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.n_classes())
            .map(|k| {
                let w = &self.weights[k * self.dim..(k + 1) * self.dim];
                self.biases[k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        softmax(&logits)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<LinearClassifier>,
    pub hyper: TrainHyper,
}

fn member_seed(master: u64, member: usize) -> u64 {
    master ^ (member as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn train_member(data: &Dataset, rows: &[usize], hyper: &TrainHyper, seed: u64) -> LinearClassifier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = data.dim();
    let c = data.n_classes();
    let n_boot = ((rows.len() as f64 * hyper.bootstrap_fraction).round() as usize).max(1);
    let sample: Vec<usize> = (0..n_boot).map(|_| rows[rng.random_range(0..rows.len())]).collect();

    let mut weights: Vec<f64> = (0..c * dim).map(|_| rng.random_range(-hyper.init_scale..=hyper.init_scale)).collect();
    let mut biases = vec![0.0; c];
    let mut grad_w = vec![0.0; c * dim];
    let mut grad_b = vec![0.0; c];
    let scale = 1.0 / sample.len() as f64;

    for _ in 0..hyper.epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        let model = LinearClassifier { weights: weights.clone(), biases: biases.clone(), dim };
        for &r in &sample {
            let x = data.features(r);
            let p = model.predict_proba(x);
            for k in 0..c {
                let err = p[k] - if data.label(r) == k { 1.0 } else { 0.0 };
                grad_b[k] += err;
                for (g, &xi) in grad_w[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                    *g += err * xi;
                }
            }
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= hyper.learning_rate * (g * scale + hyper.l2 * *w);
        }
        for (b, g) in biases.iter_mut().zip(&grad_b) {
            *b -= hyper.learning_rate * g * scale;
        }
    }
    LinearClassifier { weights, biases, dim }
}

/// Trains `n_members` classifiers on the rows `train` of `data`.
///
/// Members run in parallel; each draws its own bootstrap and initialisation
/// from a seed derived from `seed` and its position, so the result does not
/// depend on scheduling.
pub fn ensemble_train(
    data: &Dataset,
    train: &[usize],
    n_members: usize,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<EnsembleModel> {
    if n_members < 2 {
        return invalid(format!("an ensemble needs at least 2 members, got {n_members}"));
    }
    if train.is_empty() {
        return invalid("training set is empty");
    }
    if let Some(&bad) = train.iter().find(|&&r| r >= data.len()) {
        return invalid(format!("training row {bad} out of range"));
    }
    let first = data.label(train[0]);
    if train.iter().all(|&r| data.label(r) == first) {
        return invalid("training set contains a single class");
    }
    if !(hyper.learning_rate > 0.0 && hyper.bootstrap_fraction > 0.0 && hyper.l2 >= 0.0) {
        return invalid("learning rate and bootstrap fraction must be positive, l2 non-negative");
    }
    let members: Vec<LinearClassifier> = (0..n_members)
        .into_par_iter()
        .map(|k| train_member(data, train, hyper, member_seed(seed, k)))
        .collect();
    if members.iter().any(|m| m.weights.iter().chain(&m.biases).any(|v| !v.is_finite())) {
        return invalid("training diverged to non-finite parameters");
    }
    Ok(EnsembleModel { members, hyper: hyper.clone() })
}

/// One sample per member: slice `t` of point `i` is member `t`'s softmax at input `i`.
pub fn ensemble_predict_samples(model: &EnsembleModel, inputs: &[&[f64]]) -> Result<PredictionTensor> {
    let m = model.members.len();
    let c = model.members.first().map_or(0, LinearClassifier::n_classes);
    let mut values = Vec::with_capacity(inputs.len() * m * c);
    for x in inputs {
        for member in &model.members {
            values.extend(member.predict_proba(x).into_iter().map(|v| v as f32));
        }
    }
    PredictionTensor::new(inputs.len(), m, c, values)
}

impl EnsembleModel {
    /// Average member probability at `x`, in full precision.
    pub fn mean_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.members[0].n_classes()];
        for member in &self.members {
            for (a, p) in acc.iter_mut().zip(member.predict_proba(x)) {
                *a += p;
            }
        }
        let n = self.members.len() as f64;
        acc.into_iter().map(|v| v / n).collect()
    }
}
