//! Exact Bayesian backend over a finite hypothesis set.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::PredictionTensor;
use crate::error::{invalid, Error, Result};
use crate::info::entropy;

/// Finite hypothesis set with a posterior and a per-point likelihood table
/// `p(y = c | x_i, w_k)`, stored as `[point][hypothesis][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteHypothesisModel {
    n_points: usize,
    n_hypotheses: usize,
    n_classes: usize,
    likelihoods: Vec<f64>,
    posterior: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactStats {
    pub mutual_information: f64,
    pub predictive_entropy: f64,
}

impl DiscreteHypothesisModel {
    pub fn new(
        n_points: usize,
        n_hypotheses: usize,
        n_classes: usize,
        likelihoods: Vec<f64>,
        posterior: Vec<f64>,
    ) -> Result<Self> {
        if n_points == 0 || n_hypotheses == 0 || n_classes == 0 {
            return invalid("discrete model dimensions must be positive");
        }
        if likelihoods.len() != n_points * n_hypotheses * n_classes {
            return invalid(format!(
                "likelihood table has {} entries, expected {}",
                likelihoods.len(),
                n_points * n_hypotheses * n_classes
            ));
        }
        if posterior.len() != n_hypotheses {
            return invalid(format!("posterior has {} weights for {n_hypotheses} hypotheses", posterior.len()));
        }
        for (r, row) in likelihoods.chunks_exact(n_classes).enumerate() {
            if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
                return invalid(format!("likelihood row {r} has a negative or non-finite entry"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return invalid(format!("likelihood row {r} sums to {total}"));
            }
        }
        if posterior.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return invalid("posterior weights must be finite and non-negative");
        }
        let total: f64 = posterior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("posterior sums to {total}"));
        }
        Ok(Self { n_points, n_hypotheses, n_classes, likelihoods, posterior })
    }

    /// Uniform prior over hypotheses with one-hot likelihoods given by `labels[point][hypothesis]`.
    pub fn from_labels(labels: &[Vec<usize>], n_classes: usize) -> Result<Self> {
        let n_points = labels.len();
        let k = labels.first().map_or(0, Vec::len);
        let mut lik = vec![0.0; n_points * k * n_classes];
        for (i, row) in labels.iter().enumerate() {
            if row.len() != k {
                return invalid("label table is ragged");
            }
            for (h, &y) in row.iter().enumerate() {
                if y >= n_classes {
                    return invalid(format!("label {y} out of range for {n_classes} classes"));
                }
                lik[(i * k + h) * n_classes + y] = 1.0;
            }
        }
        Self::new(n_points, k, n_classes, lik, vec![1.0 / k as f64; k])
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_hypotheses(&self) -> usize {
        self.n_hypotheses
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// `p(y | x_point, w_hypothesis)`.
    pub fn likelihood(&self, point: usize, hypothesis: usize) -> &[f64] {
        let start = (point * self.n_hypotheses + hypothesis) * self.n_classes;
        &self.likelihoods[start..start + self.n_classes]
    }

    fn check_point(&self, point: usize) -> Result<()> {
        if point >= self.n_points {
            return invalid(format!("point {point} out of range for {} points", self.n_points));
        }
        Ok(())
    }

    /// Posterior predictive `sum_k w_k p(y | x, w_k)`.
    pub fn marginal(&self, point: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for (h, &w) in self.posterior.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (acc, &v) in p.iter_mut().zip(self.likelihood(point, h)) {
                *acc += w * v;
            }
        }
        p
    }

    /// Bayes update on one observed label.
    pub fn posterior_update(&self, point: usize, label: usize) -> Result<Self> {
        self.check_point(point)?;
        if label >= self.n_classes {
            return invalid(format!("label {label} out of range for {} classes", self.n_classes));
        }
        let mut weights: Vec<f64> = self
            .posterior
            .iter()
            .enumerate()
            .map(|(h, &w)| w * self.likelihood(point, h)[label])
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InconsistentEvidence { point, label });
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mut next = self.clone();
        next.posterior = weights;
        Ok(next)
    }

    /// Draws `m` hypotheses from the posterior and emits each one's
    /// predictive distribution at every requested point.
    pub fn sample_predictions(&self, points: &[usize], m: usize, seed: u64) -> Result<PredictionTensor> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        for &p in points {
            self.check_point(p)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = WeightedIndex::new(&self.posterior)
            .map_err(|e| Error::InvalidInput(format!("posterior cannot be sampled: {e}")))?;
        let draws: Vec<usize> = (0..m).map(|_| dist.sample(&mut rng)).collect();
        let mut values = Vec::with_capacity(points.len() * m * self.n_classes);
        for &p in points {
            for &h in &draws {
                values.extend(self.likelihood(p, h).iter().map(|&v| v as f32));
            }
        }
        PredictionTensor::new(points.len(), m, self.n_classes, values)
    }

    /// Exact BALD mutual information and predictive entropy at one point.
    pub fn exact_stats(&self, point: usize) -> Result<ExactStats> {
        self.check_point(point)?;
        let predictive_entropy = entropy(&self.marginal(point));
        let conditional: f64 = self
            .posterior
            .iter()
            .enumerate()
            .map(|(h, &w)| w * entropy(self.likelihood(point, h)))
            .sum();
        Ok(ExactStats { mutual_information: (predictive_entropy - conditional).max(0.0), predictive_entropy })
    }

    /// Mean predictive entropy over `eval` after observing `label` at `acquire`.
    pub fn branch_entropy(&self, acquire: usize, label: usize, eval: &[usize]) -> Result<f64> {
        let updated = self.posterior_update(acquire, label)?;
        updated.mean_entropy(eval)
    }

    /// Mean predictive entropy over `points`; zero for an empty set.
    pub fn mean_entropy(&self, points: &[usize]) -> Result<f64> {
        if points.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for &p in points {
            self.check_point(p)?;
            total += entropy(&self.marginal(p));
        }
        Ok(total / points.len() as f64)
    }

    /// Expected mean predictive entropy over `eval` after labelling `acquire`,
    /// averaging over the label under the current posterior predictive.
    pub fn expected_posterior_entropy(&self, acquire: usize, eval: &[usize]) -> Result<f64> {
        self.check_point(acquire)?;
        let mut total = 0.0;
        for (label, &p) in self.marginal(acquire).iter().enumerate() {
            if p > 0.0 {
                total += p * self.branch_entropy(acquire, label, eval)?;
            }
        }
        Ok(total)
    }

    /// Index of the hypothesis drawn from the posterior with `seed`.
    pub fn draw_hypothesis(&self, seed: u64) -> Result<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = WeightedIndex::new(&self.posterior)
            .map_err(|e| Error::InvalidInput(format!("posterior cannot be sampled: {e}")))?;
        Ok(dist.sample(&mut rng))
    }

    /// Labels produced by `hypothesis` at every point; rows that are not
    /// one-hot are sampled with `seed`.
    pub fn labels_under(&self, hypothesis: usize, seed: u64) -> Result<Vec<usize>> {
        if hypothesis >= self.n_hypotheses {
            return invalid(format!("hypothesis {hypothesis} out of range"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.n_points)
            .map(|p| {
                let row = self.likelihood(p, hypothesis);
                WeightedIndex::new(row)
                    .map(|d| d.sample(&mut rng))
                    .map_err(|e| Error::InvalidInput(format!("likelihood row cannot be sampled: {e}")))
            })
            .collect()
    }
}

/// The ten-hypothesis, four-class construction with one highly uncertain
/// point `x_1` and `points - 1` copies of a point on which only the last
/// hypothesis disagrees. Classes are zero-based here.
pub fn example1_model(points: usize) -> Result<DiscreteHypothesisModel> {
    if points < 2 {
        return invalid(format!("example 1 needs at least 2 points, got {points}"));
    }
    let first: Vec<usize> = vec![0, 1, 2, 3, 3, 3, 3, 3, 3, 3];
    let rest: Vec<usize> = vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
    let mut table = vec![first];
    table.extend(std::iter::repeat_n(rest, points - 1));
    DiscreteHypothesisModel::from_labels(&table, 4)
}
