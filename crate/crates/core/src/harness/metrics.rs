//! Per-round evaluation quantities.

use serde::{Deserialize, Serialize};

use crate::info::{argmax, entropy};
use crate::error::{invalid, Result};
use crate::models::PredictionTensor;

/// Floor applied to the true-class probability inside the log loss.
pub const NLL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub round: usize,
    pub train_size: usize,
    pub accuracy: f64,
    /// Mean negative log-likelihood of test labels, nats.
    pub nll: f64,
    /// Mean predictive entropy over the still-unlabelled pool, nats.
    pub pool_entropy: f64,
    /// Counts of acquired labels so far, by class.
    pub label_histogram: Vec<usize>,
    /// Wall time spent building this round's batch.
    pub batch_seconds: Option<f64>,
    /// Dataset indices acquired in this round.
    pub acquired: Vec<usize>,
}

fn check_labels(n: usize, labels: &[usize]) -> Result<()> {
    if n != labels.len() {
        return invalid(format!("{n} predictions for {} labels", labels.len()));
    }
    Ok(())
}

pub(crate) fn accuracy_of(marginals: &[Vec<f64>], labels: &[usize]) -> f64 {
    if marginals.is_empty() {
        return 0.0;
    }
    let hits = marginals.iter().zip(labels).filter(|(p, &y)| argmax(p) == y).count();
    hits as f64 / marginals.len() as f64
}

pub(crate) fn nll_of(marginals: &[Vec<f64>], labels: &[usize]) -> f64 {
    if marginals.is_empty() {
        return 0.0;
    }
    let total: f64 = marginals
        .iter()
        .zip(labels)
        .map(|(p, &y)| -p.get(y).copied().unwrap_or(0.0).max(NLL_FLOOR).ln())
        .sum();
    total / marginals.len() as f64
}

pub(crate) fn mean_entropy_of(marginals: &[Vec<f64>]) -> f64 {
    if marginals.is_empty() {
        return 0.0;
    }
    marginals.iter().map(|p| entropy(p)).sum::<f64>() / marginals.len() as f64
}

/// Fraction of points whose mean-predictive argmax equals the label. Zero for an empty set.
pub fn accuracy(preds: &PredictionTensor, labels: &[usize]) -> Result<f64> {
    check_labels(preds.n_points(), labels)?;
    Ok(accuracy_of(&preds.mean_predictives(), labels))
}

/// Mean of `-ln max(p(y_true), 1e-12)` under the mean predictive. Zero for an empty set.
pub fn nll(preds: &PredictionTensor, labels: &[usize]) -> Result<f64> {
    check_labels(preds.n_points(), labels)?;
    Ok(nll_of(&preds.mean_predictives(), labels))
}

pub fn mean_predictive_entropy(preds: &PredictionTensor) -> f64 {
    mean_entropy_of(&preds.mean_predictives())
}

pub fn label_histogram(labels: &[usize], n_classes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; n_classes];
    for &y in labels {
        if y >= n_classes {
            return invalid(format!("label {y} out of range for {n_classes} classes"));
        }
        counts[y] += 1;
    }
    Ok(counts)
}
