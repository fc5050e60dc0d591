//! Kernel-dependency acquisition: greedy forward selection of the batch whose
//! averaged kernel depends most on a random subsample of the pool.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_pool, AcquisitionBatch, AcquisitionConfig};
use crate::dhsic::{clamp_noise, hsic2, CenteredKernel};
use crate::error::{invalid, Result};
use crate::info::top_k;
use crate::kernels::{mean_kernels, KernelMatrix};
use crate::models::PredictionTensor;

/// Floor on the batch dependency used as a denominator by the pointwise variant.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Dependency between the averaged candidate kernel and the summed pool kernel.
///
/// Because the statistic is linear in each kernel, this equals the sum of the
/// pairwise statistics against every pooled point.
pub fn score_ical(candidate_kernels: &[&KernelMatrix], pool_kernel_sum: &KernelMatrix) -> Result<f64> {
    let mean = mean_kernels(candidate_kernels)?;
    Ok(hsic2(&mean, pool_kernel_sum)?.value)
}

pub fn select_ical(preds: &PredictionTensor, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    check_pool(preds.n_points(), cfg)?;
    let kernels = preds.kernels(&cfg.kernel)?;
    select_ical_with_kernels(&kernels, cfg)
}

pub fn select_ical_pointwise(preds: &PredictionTensor, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    check_pool(preds.n_points(), cfg)?;
    let kernels = preds.kernels(&cfg.kernel)?;
    select_ical_pointwise_with_kernels(&kernels, cfg)
}

/// [`select_ical`] on precomputed per-point kernels.
pub fn select_ical_with_kernels(kernels: &[KernelMatrix], cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    greedy(kernels, cfg, false)
}

/// [`select_ical_pointwise`] on precomputed per-point kernels.
pub fn select_ical_pointwise_with_kernels(kernels: &[KernelMatrix], cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    greedy(kernels, cfg, true)
}

/// Uniform subsample of `min(r, available.len())` entries of `available`.
pub(crate) fn draw_subsample(rng: &mut ChaCha8Rng, available: &[usize], r: usize) -> Vec<usize> {
    let take = r.min(available.len());
    index::sample(rng, available.len(), take).into_iter().map(|k| available[k]).collect()
}

fn greedy(kernels: &[KernelMatrix], cfg: &AcquisitionConfig, pointwise: bool) -> Result<AcquisitionBatch> {
    let n = kernels.len();
    check_pool(n, cfg)?;
    let m = kernels[0].m();
    if kernels.iter().any(|k| k.m() != m) {
        return invalid("pool kernels have different sizes");
    }
    if m < 4 {
        return invalid(format!("kernel dependency scoring needs m >= 4 samples, got {m}"));
    }
    if pointwise && cfg.subsample < 2 {
        return invalid("the pointwise variant needs a subsample of at least 2 points");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut in_batch = vec![false; n];
    let mut batch: Vec<usize> = Vec::with_capacity(cfg.batch_size);
    let mut added_scores: Vec<f64> = Vec::with_capacity(cfg.batch_size);
    let mut batch_sum = KernelMatrix::zeros(m);

    while batch.len() < cfg.batch_size {
        let available: Vec<usize> = (0..n).filter(|&i| !in_batch[i]).collect();
        let subsample = draw_subsample(&mut rng, &available, cfg.subsample);
        let mut pool_sum = KernelMatrix::zeros(m);
        for &i in &subsample {
            pool_sum.add_assign(&kernels[i]);
        }
        let centered_pool = CenteredKernel::new(&pool_sum);
        let batch_term = centered_pool.raw_inner(&batch_sum);
        let size = batch.len() as f64;

        let mut scores: Vec<f64> = available
            .par_iter()
            .map(|&x| clamp_noise((batch_term + centered_pool.raw_inner(&kernels[x])) / (size + 1.0)))
            .collect();

        if pointwise && !batch.is_empty() {
            let centered_ref: Vec<CenteredKernel> =
                subsample.iter().map(|&i| CenteredKernel::new(&kernels[i])).collect();
            let batch_raw: Vec<f64> = centered_ref.iter().map(|c| c.raw_inner(&batch_sum)).collect();
            let gains: Vec<f64> = available
                .par_iter()
                .map(|&x| {
                    let total: f64 = centered_ref
                        .iter()
                        .zip(&batch_raw)
                        .map(|(c, &braw)| {
                            let before = clamp_noise(braw / size).max(RATIO_FLOOR);
                            let after = clamp_noise((braw + c.raw_inner(&kernels[x])) / (size + 1.0));
                            (after / before).max(1.0)
                        })
                        .sum();
                    total / centered_ref.len() as f64 - 1.0
                })
                .collect();
            for (s, g) in scores.iter_mut().zip(gains) {
                *s *= g;
            }
        }

        let take = cfg.minibatch.min(cfg.batch_size - batch.len());
        for pos in top_k(&scores, take) {
            let x = available[pos];
            in_batch[x] = true;
            batch.push(x);
            added_scores.push(scores[pos]);
            batch_sum.add_assign(&kernels[x]);
        }
    }
    Ok(AcquisitionBatch { indices: batch, scores: Some(added_scores) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::Policy;
    use crate::kernels::{kernel_matrix, sum_kernels, KernelSpec};

    fn random_kernels(n: usize, m: usize, seed: u64) -> Vec<KernelMatrix> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let samples: Vec<f64> = (0..m * 3).map(|_| rng.random::<f64>()).collect();
                kernel_matrix(&samples, 3, &KernelSpec::default()).unwrap()
            })
            .collect()
    }

    fn cfg(b: usize, r: usize, l: usize, seed: u64) -> AcquisitionConfig {
        AcquisitionConfig { subsample: r, minibatch: l, ..AcquisitionConfig::new(Policy::Ical, b).with_seed(seed) }
    }

    #[test]
    fn constant_candidate_scores_zero() {
        let ks = random_kernels(3, 8, 1);
        let pool = sum_kernels(&ks.iter().collect::<Vec<_>>()).unwrap();
        let constant = KernelMatrix::constant(8, 5.0);
        assert!(score_ical(&[&constant], &pool).unwrap().abs() < 1e-12);
        assert!(score_ical(&[&ks[0]], &ks[0]).unwrap() > 0.0);
    }

    #[test]
    fn pool_sum_equals_sum_of_pairwise_scores() {
        let ks = random_kernels(4, 10, 2);
        let pool = sum_kernels(&[&ks[1], &ks[2], &ks[3]]).unwrap();
        let joint = score_ical(&[&ks[0]], &pool).unwrap();
        let split: f64 = (1..4).map(|i| score_ical(&[&ks[0]], &ks[i]).unwrap()).sum();
        assert!((joint - split).abs() <= 1e-9 * split.abs());
    }

    #[test]
    fn identical_pool_takes_lowest_indices() {
        let k = random_kernels(1, 8, 3).pop().unwrap();
        let pool = vec![k; 6];
        let batch = select_ical_with_kernels(&pool[..4], &cfg(4, 200, 1, 9)).unwrap();
        assert_eq!(batch.indices, vec![0, 1, 2, 3]);
        let batch = select_ical_with_kernels(&pool, &cfg(3, 200, 2, 9)).unwrap();
        assert_eq!(batch.indices, vec![0, 1, 2]);
    }

    #[test]
    fn greedy_trace_matches_exhaustive_step_search() {
        for seed in 0..10 {
            let ks = random_kernels(4, 8, 100 + seed);
            let c = cfg(2, 4, 1, seed);
            let batch = select_ical_with_kernels(&ks, &c).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen: Vec<usize> = Vec::new();
            for _ in 0..2 {
                let available: Vec<usize> = (0..4).filter(|i| !chosen.contains(i)).collect();
                let r = draw_subsample(&mut rng, &available, 4);
                let pool = sum_kernels(&r.iter().map(|&i| &ks[i]).collect::<Vec<_>>()).unwrap();
                let scored: Vec<(usize, f64)> = available
                    .iter()
                    .map(|&x| {
                        let mut set: Vec<&KernelMatrix> = chosen.iter().map(|&i| &ks[i]).collect();
                        set.push(&ks[x]);
                        (x, score_ical(&set, &pool).unwrap())
                    })
                    .collect();
                let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
                let pick = batch.indices[chosen.len()];
                let pick_score = scored.iter().find(|s| s.0 == pick).unwrap().1;
                assert!(pick_score >= best - 1e-12 * best.abs());
                chosen.push(pick);
            }
        }
    }

    #[test]
    fn full_minibatch_is_single_pass_top_b() {
        let ks = random_kernels(12, 8, 5);
        let c = cfg(4, 6, 4, 21);
        let batch = select_ical_with_kernels(&ks, &c).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let all: Vec<usize> = (0..12).collect();
        let r = draw_subsample(&mut rng, &all, 6);
        let pool = sum_kernels(&r.iter().map(|&i| &ks[i]).collect::<Vec<_>>()).unwrap();
        let scores: Vec<f64> = ks.iter().map(|k| score_ical(&[k], &pool).unwrap()).collect();
        assert_eq!(batch.indices, top_k(&scores, 4));
        for (got, &i) in batch.scores.unwrap().iter().zip(&batch.indices) {
            assert!((got - scores[i]).abs() <= 1e-12 * scores[i].abs().max(1.0));
        }
    }

    #[test]
    fn pointwise_first_pick_matches_plain() {
        for seed in 0..5 {
            let ks = random_kernels(9, 8, 40 + seed);
            let c = cfg(3, 5, 1, seed);
            let plain = select_ical_with_kernels(&ks, &c).unwrap();
            let pointwise = select_ical_pointwise_with_kernels(&ks, &c).unwrap();
            assert_eq!(plain.indices[0], pointwise.indices[0]);
        }
    }

    #[test]
    fn pointwise_zero_gain_for_duplicate_of_batch_member() {
        let ks = random_kernels(3, 10, 8);
        // pool: 0 and 1 are twins, 2 is unrelated; batch {0}
        let pool = vec![ks[0].clone(), ks[0].clone(), ks[2].clone()];
        let c = AcquisitionConfig { policy: Policy::IcalPointwise, ..cfg(2, 200, 1, 0) };
        let batch = select_ical_pointwise_with_kernels(&pool, &c).unwrap();
        assert_eq!(batch.indices.len(), 2);
        assert!(!(batch.indices.contains(&0) && batch.indices.contains(&1)));

        // M_x for the twin is exactly 1
        let size = 1.0;
        let centered = CenteredKernel::new(&pool[2]);
        let braw = centered.raw_inner(&pool[0]);
        let before = (braw / size).max(RATIO_FLOOR);
        let after = (braw + centered.raw_inner(&pool[1])) / (size + 1.0);
        assert!((after / before - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_pools_and_samples() {
        let ks = random_kernels(2, 8, 0);
        assert!(select_ical_with_kernels(&ks, &cfg(3, 10, 1, 0)).is_err());
        let tiny = vec![KernelMatrix::constant(3, 1.0); 4];
        assert!(select_ical_with_kernels(&tiny, &cfg(2, 10, 1, 0)).is_err());
        let ks = random_kernels(4, 8, 0);
        assert!(select_ical_pointwise_with_kernels(&ks, &cfg(2, 1, 1, 0)).is_err());
    }
}
