//! Runtime model state behind an experiment.

use std::path::Path;

use super::config::{BackendSpec, DatasetSpec, DiscreteTask};
use crate::datasets::{gaussian_blobs, random_hypothesis_task, ring_centers, Dataset};
use crate::error::{Error, Result};
use crate::models::{
    ensemble_predict_samples, ensemble_train, example1_model, load_predictions, DiscreteHypothesisModel,
    EnsembleModel, PredictionTensor, TrainHyper,
};

pub(crate) enum Backend {
    Discrete {
        model: DiscreteHypothesisModel,
        labels: Vec<usize>,
    },
    Ensemble {
        data: Dataset,
        members: usize,
        hyper: TrainHyper,
        model: Option<EnsembleModel>,
    },
    External {
        preds: PredictionTensor,
        labels: Vec<usize>,
    },
}

fn read_label_column(path: &Path) -> Result<Vec<usize>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = record.iter().next_back().unwrap_or("");
        labels.push(
            field
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("labels row {}: bad label {field:?}", row + 1)))?,
        );
    }
    Ok(labels)
}

impl Backend {
    pub fn build(spec: &BackendSpec, seed: u64) -> Result<Self> {
        match spec {
            BackendSpec::Discrete { task, true_hypothesis } => {
                let model = match task {
                    DiscreteTask::Example1 { points } => example1_model(*points)?,
                    DiscreteTask::Random { hypotheses, points, classes, disagreement, task_seed } => {
                        random_hypothesis_task(*hypotheses, *points, *classes, *disagreement, *task_seed)?
                    }
                };
                let truth = match true_hypothesis {
                    Some(h) if *h >= model.n_hypotheses() => {
                        return Err(Error::Config(format!("backend.true_hypothesis: {h} out of range")))
                    }
                    Some(h) => *h,
                    None => model.draw_hypothesis(seed)?,
                };
                let labels = model.labels_under(truth, seed ^ 0x5EED)?;
                Ok(Backend::Discrete { model, labels })
            }
            BackendSpec::Ensemble { dataset, members, train } => {
                let data = match dataset {
                    DatasetSpec::Csv { path } => Dataset::from_csv(path)?,
                    DatasetSpec::Blobs { classes, per_class, radius, spread, task_seed } => {
                        gaussian_blobs(*classes, *per_class, &ring_centers(*classes, *radius), *spread, *task_seed)?
                    }
                };
                Ok(Backend::Ensemble { data, members: *members, hyper: train.clone(), model: None })
            }
            BackendSpec::External { predictions, labels } => {
                let preds = load_predictions(predictions)?;
                let labels = read_label_column(labels)?;
                if labels.len() != preds.n_points() {
                    return Err(Error::Config(format!(
                        "backend.labels: {} labels for {} predicted points",
                        labels.len(),
                        preds.n_points()
                    )));
                }
                if let Some(&y) = labels.iter().find(|&&y| y >= preds.c()) {
                    return Err(Error::Config(format!("backend.labels: label {y} out of range")));
                }
                Ok(Backend::External { preds, labels })
            }
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Backend::Discrete { model, .. } => model.n_classes(),
            Backend::Ensemble { data, .. } => data.n_classes(),
            Backend::External { preds, .. } => preds.c(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        match self {
            Backend::Discrete { labels, .. } | Backend::External { labels, .. } => labels,
            Backend::Ensemble { data, .. } => data.labels(),
        }
    }

    /// Incorporates the labels of `train` (all labelled points so far).
    pub fn fit(&mut self, train: &[usize], newly_labelled: &[usize], seed: u64) -> Result<()> {
        match self {
            Backend::Discrete { model, labels } => {
                for &i in newly_labelled {
                    *model = model.posterior_update(i, labels[i])?;
                }
            }
            Backend::Ensemble { data, members, hyper, model } => {
                *model = Some(ensemble_train(data, train, *members, hyper, seed)?);
            }
            Backend::External { .. } => {}
        }
        Ok(())
    }

    /// Monte Carlo predictive samples at `points`.
    pub fn sample(&self, points: &[usize], m: usize, seed: u64) -> Result<PredictionTensor> {
        match self {
            Backend::Discrete { model, .. } => model.sample_predictions(points, m, seed),
            Backend::Ensemble { data, model, .. } => {
                let model = model.as_ref().ok_or_else(|| Error::InvalidInput("ensemble is not trained".into()))?;
                let inputs: Vec<&[f64]> = points.iter().map(|&i| data.features(i)).collect();
                ensemble_predict_samples(model, &inputs)
            }
            Backend::External { preds, .. } => preds.select(points),
        }
    }

    /// Mean predictive distribution at each of `points`, in full precision.
    pub fn predictive(&self, points: &[usize]) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Discrete { model, .. } => Ok(points.iter().map(|&i| model.marginal(i)).collect()),
            Backend::Ensemble { data, model, .. } => {
                let model = model.as_ref().ok_or_else(|| Error::InvalidInput("ensemble is not trained".into()))?;
                Ok(points.iter().map(|&i| model.mean_proba(data.features(i))).collect())
            }
            Backend::External { preds, .. } => Ok(points.iter().map(|&i| preds.mean_predictive(i)).collect()),
        }
    }

    /// Input features for FASS; backends without inputs use the mean predictive.
    pub fn features(&self, points: &[usize]) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Ensemble { data, .. } => Ok(points.iter().map(|&i| data.features(i).to_vec()).collect()),
            _ => self.predictive(points),
        }
    }
}
