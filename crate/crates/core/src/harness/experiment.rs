//! The acquire, label, refit, evaluate loop.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backend::Backend;
use super::config::{BackendSpec, ExperimentConfig};
use super::metrics::{accuracy_of, label_histogram, mean_entropy_of, nll_of, MetricsRecord};
use crate::acquisition::{self, select_ical_pointwise_with_kernels, select_ical_with_kernels, AcquisitionConfig, Policy};
use crate::error::{Error, Result};
use crate::models::PredictionTensor;

/// Independent seed for one purpose and round, derived from the experiment seed.
pub(crate) fn derive_seed(master: u64, stream: u64, round: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(round.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_TRUTH: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_SAMPLE: u64 = 3;
const STREAM_ACQUIRE: u64 = 4;
const STREAM_FIT: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Split {
    pub initial: Vec<usize>,
    pub pool: Vec<usize>,
    pub test: Vec<usize>,
}

fn resolve_split(cfg: &ExperimentConfig, labels: &[usize], n_classes: usize) -> Result<Split> {
    let n = labels.len();
    let spec = &cfg.split;
    let check_range = |name: &str, list: &[usize]| -> Result<()> {
        match list.iter().find(|&&i| i >= n) {
            Some(i) => Err(Error::Config(format!("split.{name}: index {i} out of range for {n} points"))),
            None => Ok(()),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SPLIT, 0));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut reserved: HashSet<usize> = HashSet::new();
    for list in [&spec.initial, &spec.pool, &spec.test].into_iter().flatten() {
        reserved.extend(list.iter().copied());
    }

    let test = match (&spec.test, spec.test_size) {
        (Some(t), _) => t.clone(),
        (None, Some(size)) => {
            let free: Vec<usize> = order.iter().copied().filter(|i| !reserved.contains(i)).collect();
            if free.len() < size {
                return Err(Error::Config(format!("split.test_size: {size} exceeds {} free points", free.len())));
            }
            free[..size].to_vec()
        }
        (None, None) => Vec::new(),
    };
    check_range("test", &test)?;
    reserved.extend(test.iter().copied());

    let initial = match (&spec.initial, spec.initial_per_class) {
        (Some(i), _) => i.clone(),
        (None, Some(per_class)) => {
            let mut counts = vec![0usize; n_classes];
            let mut chosen = Vec::new();
            for &i in &order {
                if reserved.contains(&i) || spec.pool.as_ref().is_some_and(|p| p.contains(&i)) {
                    continue;
                }
                if counts[labels[i]] < per_class {
                    counts[labels[i]] += 1;
                    chosen.push(i);
                }
            }
            if counts.iter().any(|&c| c < per_class) {
                return Err(Error::Config(format!("split.initial_per_class: not enough points for {per_class} per class")));
            }
            chosen.sort_unstable();
            chosen
        }
        (None, None) => Vec::new(),
    };
    check_range("initial", &initial)?;
    reserved.extend(initial.iter().copied());

    let pool = match &spec.pool {
        Some(p) => p.clone(),
        None => (0..n).filter(|i| !reserved.contains(i)).collect(),
    };
    check_range("pool", &pool)?;

    let initial_set: HashSet<_> = initial.iter().collect();
    let test_set: HashSet<_> = test.iter().collect();
    if let Some(i) = pool.iter().find(|i| initial_set.contains(i) || test_set.contains(i)) {
        return Err(Error::Config(format!("split: index {i} is in the pool and another set")));
    }
    if let Some(i) = initial.iter().find(|i| test_set.contains(i)) {
        return Err(Error::Config(format!("split: index {i} appears in both initial and test")));
    }
    let needed = cfg.rounds * cfg.acquisition.batch_size;
    if pool.len() < needed {
        return Err(Error::Config(format!(
            "split.pool: {} points cannot supply {} rounds of {} acquisitions",
            pool.len(),
            cfg.rounds,
            cfg.acquisition.batch_size
        )));
    }
    Ok(Split { initial, pool, test })
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    backend: &Backend,
    cfg: &ExperimentConfig,
    round: usize,
    train_size: usize,
    split: &Split,
    acquired_labels: &[usize],
    acquired: Vec<usize>,
    batch_seconds: Option<f64>,
) -> Result<MetricsRecord> {
    let labels = backend.labels();
    let test_marginals = backend.predictive(&split.test)?;
    let test_labels: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let pool_entropy = if cfg.metrics.pool_entropy {
        mean_entropy_of(&backend.predictive(&split.pool)?)
    } else {
        0.0
    };
    Ok(MetricsRecord {
        round,
        train_size,
        accuracy: accuracy_of(&test_marginals, &test_labels),
        nll: nll_of(&test_marginals, &test_labels),
        pool_entropy,
        label_histogram: label_histogram(acquired_labels, backend.n_classes())?,
        batch_seconds,
        acquired,
    })
}

/// Runs `cfg.rounds` acquisition rounds and returns `rounds + 1` records,
/// the first describing the model before any acquisition.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    cfg.validate_static()?;
    let mut backend = Backend::build(&cfg.backend, derive_seed(cfg.seed, STREAM_TRUTH, 0))?;
    let labels = backend.labels().to_vec();
    let mut split = resolve_split(cfg, &labels, backend.n_classes())?;
    if matches!(cfg.backend, BackendSpec::Ensemble { .. }) {
        let distinct: HashSet<_> = split.initial.iter().map(|&i| labels[i]).collect();
        if distinct.len() < 2 {
            return Err(Error::Config("split: the ensemble backend needs initial points from at least 2 classes".into()));
        }
    }

    let mut train = split.initial.clone();
    backend.fit(&train, &split.initial, derive_seed(cfg.seed, STREAM_FIT, 0))?;

    let mut acquired_labels: Vec<usize> = Vec::new();
    let mut records = vec![evaluate(&backend, cfg, 0, train.len(), &split, &acquired_labels, Vec::new(), None)?];

    for round in 1..=cfg.rounds {
        let r = round as u64;
        let acq = AcquisitionConfig { seed: derive_seed(cfg.seed, STREAM_ACQUIRE, r), ..cfg.acquisition.clone() };
        let preds = backend.sample(&split.pool, acq.mc_samples, derive_seed(cfg.seed, STREAM_SAMPLE, r))?;
        let features = match acq.policy {
            Policy::Fass => Some(backend.features(&split.pool)?),
            _ => None,
        };

        let start = Instant::now();
        let batch = acquisition::select(&preds, features.as_deref(), &acq)?;
        let elapsed = start.elapsed().as_secs_f64();

        let chosen: Vec<usize> = batch.indices.iter().map(|&k| split.pool[k]).collect();
        let chosen_set: HashSet<_> = chosen.iter().collect();
        split.pool.retain(|i| !chosen_set.contains(i));
        train.extend(&chosen);
        acquired_labels.extend(chosen.iter().map(|&i| labels[i]));
        backend.fit(&train, &chosen, derive_seed(cfg.seed, STREAM_FIT, r))?;

        let seconds = cfg.metrics.timing.then_some(elapsed);
        records.push(evaluate(&backend, cfg, round, train.len(), &split, &acquired_labels, chosen, seconds)?);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub minibatch: usize,
    pub seconds: f64,
}

/// Wall time of building one batch for each minibatch size `L`.
///
/// Kernel matrices are computed once up front and shared by every run, so
/// the table reflects the greedy selection loop alone. Each entry is the
/// fastest of `repeats` runs.
pub fn timing_profile(
    preds: &PredictionTensor,
    cfg: &AcquisitionConfig,
    minibatches: &[usize],
    repeats: usize,
) -> Result<Vec<TimingRow>> {
    let kernels = preds.kernels(&cfg.kernel)?;
    let mut rows = Vec::with_capacity(minibatches.len());
    for &minibatch in minibatches {
        let run_cfg = AcquisitionConfig { minibatch, ..cfg.clone() };
        run_cfg.validate()?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            match run_cfg.policy {
                Policy::IcalPointwise => select_ical_pointwise_with_kernels(&kernels, &run_cfg)?,
                _ => select_ical_with_kernels(&kernels, &run_cfg)?,
            };
            best = best.min(start.elapsed().as_secs_f64());
        }
        rows.push(TimingRow { minibatch, seconds: best });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SplitSpec;

    fn example1_cfg(policy: &str, rounds: usize, batch: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
seed = {seed}
rounds = {rounds}
[backend]
kind = "discrete"
task = {{ name = "example1", points = 10 }}
[acquisition]
policy = "{policy}"
batch_size = {batch}
mc_samples = 64
"#
        ))
        .unwrap()
    }

    #[test]
    fn record_count_and_round_zero() {
        let records = run_experiment(&example1_cfg("bald", 3, 2, 1)).unwrap();
        assert_eq!(records.len(), 4);
        assert_eq!(records[0].round, 0);
        assert!(records[0].acquired.is_empty());
        assert_eq!(records[3].label_histogram.iter().sum::<usize>(), 6);
    }

    #[test]
    fn exhausting_the_pool_reports_zero_entropy() {
        let records = run_experiment(&example1_cfg("random", 2, 5, 4)).unwrap();
        assert_eq!(records.last().unwrap().pool_entropy, 0.0);
        let mut acquired: Vec<usize> = records.iter().flat_map(|r| r.acquired.clone()).collect();
        acquired.sort();
        assert_eq!(acquired, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn pool_too_small_is_a_config_error() {
        let err = run_experiment(&example1_cfg("random", 3, 4, 0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn split_resolution_honours_explicit_lists() {
        let mut cfg = example1_cfg("random", 1, 1, 0);
        cfg.split = SplitSpec { initial: Some(vec![0]), test: Some(vec![9, 8]), ..SplitSpec::default() };
        let labels = vec![0; 10];
        let split = resolve_split(&cfg, &labels, 4).unwrap();
        assert_eq!(split.initial, vec![0]);
        assert_eq!(split.test, vec![9, 8]);
        assert_eq!(split.pool, (1..8).collect::<Vec<_>>());

        cfg.split = SplitSpec { initial: Some(vec![12]), ..SplitSpec::default() };
        assert!(resolve_split(&cfg, &labels, 4).is_err());
    }

    #[test]
    fn per_class_initial_set() {
        let mut cfg = example1_cfg("random", 1, 1, 0);
        cfg.split = SplitSpec { initial_per_class: Some(2), test_size: Some(2), ..SplitSpec::default() };
        let labels = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2];
        let split = resolve_split(&cfg, &labels, 3).unwrap();
        assert_eq!(split.initial.len(), 6);
        for k in 0..3 {
            assert_eq!(split.initial.iter().filter(|&&i| labels[i] == k).count(), 2);
        }
        assert_eq!(split.test.len(), 2);
        assert_eq!(split.pool.len(), 4);
    }

    #[test]
    fn derived_seeds_differ_by_stream_and_round() {
        let a = derive_seed(1, STREAM_SAMPLE, 1);
        assert_ne!(a, derive_seed(1, STREAM_SAMPLE, 2));
        assert_ne!(a, derive_seed(1, STREAM_ACQUIRE, 1));
        assert_ne!(a, derive_seed(2, STREAM_SAMPLE, 1));
    }
}
