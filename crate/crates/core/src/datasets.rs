//! Labelled feature datasets and synthetic task generators.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::models::DiscreteHypothesisModel;

/// Dense feature matrix with one integer label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return invalid(format!("{} feature values do not fit {} rows of dim {dim}", features.len(), labels.len()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return invalid("features must be finite");
        }
        let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Self { features, labels, dim, n_classes })
    }

    /// Reads a CSV with a header row: feature columns, then an integer label column.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let width = reader.headers()?.len();
        if width < 2 {
            return Err(Error::Config("dataset CSV needs at least one feature column and a label column".into()));
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            for field in record.iter().take(width - 1) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("row {}: bad feature value {field:?}", row + 1)))?;
                features.push(v);
            }
            let label = &record[width - 1];
            labels.push(
                label
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("row {}: bad label {label:?}", row + 1)))?,
            );
        }
        Self::new(features, labels, width - 1)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self, row: usize) -> &[f64] {
        &self.features[row * self.dim..(row + 1) * self.dim]
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Isotropic Gaussian clusters, one per centre, rows shuffled.
pub fn gaussian_blobs(
    n_classes: usize,
    per_class: usize,
    centers: &[Vec<f64>],
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if centers.len() != n_classes || n_classes < 2 {
        return invalid(format!("need one centre per class and at least 2 classes, got {} centres", centers.len()));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return invalid("centres must share a positive dimension");
    }
    let noise = Normal::new(0.0, spread).map_err(|e| Error::InvalidInput(format!("bad spread: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(n_classes * per_class);
    for (label, centre) in centers.iter().enumerate() {
        for _ in 0..per_class {
            rows.push((centre.iter().map(|&c| c + noise.sample(&mut rng)).collect(), label));
        }
    }
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|r| r.1).collect();
    let features = rows.into_iter().flat_map(|r| r.0).collect();
    Dataset::new(features, labels, dim)
}

/// Centres on a circle of the given radius.
pub fn ring_centers(n_classes: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..n_classes)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n_classes as f64;
            vec![radius * angle.cos(), radius * angle.sin()]
        })
        .collect()
}

/// Random one-hot hypothesis task with balanced majority labels.
///
/// Every point has a majority label (classes assigned round-robin, then
/// shuffled). Each hypothesis deviates from it to a uniformly chosen other
/// class with a point-specific rate `disagreement * u^3`, `u ~ U(0, 1)`, so
/// most points are nearly settled and a few carry most of the information.
pub fn random_hypothesis_task(
    n_hypotheses: usize,
    n_points: usize,
    n_classes: usize,
    disagreement: f64,
    seed: u64,
) -> Result<DiscreteHypothesisModel> {
    if n_hypotheses < 2 || n_points == 0 || n_classes < 2 {
        return invalid("random task needs >= 2 hypotheses, >= 1 point and >= 2 classes");
    }
    if !(0.0..=1.0).contains(&disagreement) {
        return invalid(format!("disagreement {disagreement} outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut majority: Vec<usize> = (0..n_points).map(|i| i % n_classes).collect();
    majority.shuffle(&mut rng);
    let table: Vec<Vec<usize>> = majority
        .iter()
        .map(|&base| {
            let rate = disagreement * rng.random::<f64>().powi(3);
            (0..n_hypotheses)
                .map(|_| {
                    if rng.random::<f64>() < rate {
                        let other = rng.random_range(0..n_classes - 1);
                        if other >= base {
                            other + 1
                        } else {
                            other
                        }
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect();
    DiscreteHypothesisModel::from_labels(&table, n_classes)
}
