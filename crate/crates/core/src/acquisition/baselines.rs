//! Random, maximum-entropy, BALD and BatchBALD acquisition.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_pool, AcquisitionBatch, AcquisitionConfig};
use crate::error::{invalid, Result};
use crate::info::top_k;
use crate::models::PredictionTensor;

/// Joint entropies are enumerated exactly while `c^j` stays at or below this.
pub const BATCHBALD_EXACT_LIMIT: usize = 1_000_000;
/// Cap on the stored `configurations x m` table of the exact path.
const EXACT_TABLE_LIMIT: usize = 1 << 24;
const SAMPLED_CONFIGS: usize = 10_000;

pub fn select_random(pool_size: usize, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    check_pool(pool_size, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let indices = index::sample(&mut rng, pool_size, cfg.batch_size).into_vec();
    Ok(AcquisitionBatch { indices, scores: None })
}

fn top_b(scores: Vec<f64>, b: usize) -> AcquisitionBatch {
    let indices = top_k(&scores, b);
    let picked = indices.iter().map(|&i| scores[i]).collect();
    AcquisitionBatch { indices, scores: Some(picked) }
}

/// Top-`B` points by entropy of the mean predictive.
pub fn select_maxent(preds: &PredictionTensor, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    check_pool(preds.n_points(), cfg)?;
    let scores = (0..preds.n_points()).map(|i| preds.predictive_entropy(i)).collect();
    Ok(top_b(scores, cfg.batch_size))
}

/// Mutual information between the label of point `i` and the model,
/// `H[mean predictive] - mean_t H[sample t]`.
pub fn score_bald(preds: &PredictionTensor, i: usize) -> f64 {
    (preds.predictive_entropy(i) - preds.expected_conditional_entropy(i)).max(0.0)
}

/// Top-`B` points by individual BALD score.
pub fn select_bald(preds: &PredictionTensor, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    check_pool(preds.n_points(), cfg)?;
    let scores = (0..preds.n_points()).map(|i| score_bald(preds, i)).collect();
    Ok(top_b(scores, cfg.batch_size))
}

/// Joint distribution of the current batch's labels, per posterior sample.
enum JointTable {
    /// Every configuration: `probs[config * m + t] = prod_i p(y_i = config_i | w_t)`.
    Exact { probs: Vec<f64> },
    /// Configurations drawn from the batch joint, with their per-sample products
    /// and their mixture probability.
    Sampled { probs: Vec<f64>, marginal: Vec<f64> },
}

struct Sampler<'a> {
    p: &'a [Vec<f64>],
    m: usize,
    c: usize,
}

impl Sampler<'_> {
    fn prob(&self, point: usize, t: usize) -> &[f64] {
        &self.p[point][t * self.c..(t + 1) * self.c]
    }

    fn exact(&self, batch: &[usize]) -> Vec<f64> {
        let mut probs = vec![1.0; self.m];
        for &i in batch {
            let configs = probs.len() / self.m;
            let mut next = Vec::with_capacity(configs * self.c * self.m);
            for cfg in 0..configs {
                for y in 0..self.c {
                    for t in 0..self.m {
                        next.push(probs[cfg * self.m + t] * self.prob(i, t)[y]);
                    }
                }
            }
            probs = next;
        }
        probs
    }

    fn sampled(&self, batch: &[usize], rng: &mut ChaCha8Rng) -> JointTable {
        let mut probs = Vec::with_capacity(SAMPLED_CONFIGS * self.m);
        let mut marginal = Vec::with_capacity(SAMPLED_CONFIGS);
        for _ in 0..SAMPLED_CONFIGS {
            let t0 = rng.random_range(0..self.m);
            let labels: Vec<usize> = batch
                .iter()
                .map(|&i| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let row = self.prob(i, t0);
                    for (y, &p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return y;
                        }
                    }
                    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
                })
                .collect();
            let start = probs.len();
            for t in 0..self.m {
                probs.push(batch.iter().zip(&labels).map(|(&i, &y)| self.prob(i, t)[y]).product());
            }
            marginal.push(probs[start..].iter().sum::<f64>() / self.m as f64);
        }
        JointTable::Sampled { probs, marginal }
    }

    /// Entropy of the joint over batch labels and the candidate's label.
    fn joint_entropy(&self, table: &JointTable, x: usize) -> f64 {
        let m = self.m as f64;
        let xlogx = |q: f64| if q > 0.0 { q * q.ln() } else { 0.0 };
        match table {
            JointTable::Exact { probs } => {
                let mut h = 0.0;
                for row in probs.chunks_exact(self.m) {
                    for y in 0..self.c {
                        let q: f64 = row.iter().enumerate().map(|(t, &pb)| pb * self.prob(x, t)[y]).sum::<f64>() / m;
                        h -= xlogx(q);
                    }
                }
                h
            }
            JointTable::Sampled { probs, marginal } => {
                let mut h = 0.0;
                for (row, &pb) in probs.chunks_exact(self.m).zip(marginal) {
                    if pb <= 0.0 {
                        continue;
                    }
                    for y in 0..self.c {
                        let q: f64 = row.iter().enumerate().map(|(t, &p)| p * self.prob(x, t)[y]).sum::<f64>() / m;
                        if q > 0.0 {
                            h -= q / pb * q.ln();
                        }
                    }
                }
                h / marginal.len() as f64
            }
        }
    }
}

/// Greedy maximisation of the joint mutual information
/// `H[y_1..y_j] - sum_i E_w H[y_i | w]` over the batch.
pub fn select_batchbald(preds: &PredictionTensor, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    let n = preds.n_points();
    check_pool(n, cfg)?;
    let (m, c) = (preds.m(), preds.c());
    if m == 0 {
        return invalid("predictions have no samples");
    }
    let p: Vec<Vec<f64>> = (0..n).map(|i| preds.point(i).iter().map(|&v| v as f64).collect()).collect();
    let conditional: Vec<f64> = (0..n).map(|i| preds.expected_conditional_entropy(i)).collect();
    let sampler = Sampler { p: &p, m, c };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut batch: Vec<usize> = Vec::with_capacity(cfg.batch_size);
    let mut in_batch = vec![false; n];
    let mut scores = Vec::with_capacity(cfg.batch_size);
    let mut conditional_sum = 0.0;
    while batch.len() < cfg.batch_size {
        let j = batch.len() as u32 + 1;
        let configs = c.checked_pow(j);
        let batch_configs = c.pow(j - 1);
        let exact = configs.is_some_and(|k| k <= BATCHBALD_EXACT_LIMIT)
            && batch_configs.saturating_mul(m) <= EXACT_TABLE_LIMIT;
        let table = if exact {
            JointTable::Exact { probs: sampler.exact(&batch) }
        } else {
            sampler.sampled(&batch, &mut rng)
        };
        let candidates: Vec<usize> = (0..n).filter(|&i| !in_batch[i]).collect();
        let values: Vec<f64> = candidates
            .par_iter()
            .map(|&x| sampler.joint_entropy(&table, x) - conditional_sum - conditional[x])
            .collect();
        let pos = top_k(&values, 1)[0];
        let x = candidates[pos];
        in_batch[x] = true;
        batch.push(x);
        scores.push(values[pos]);
        conditional_sum += conditional[x];
    }
    Ok(AcquisitionBatch { indices: batch, scores: Some(scores) })
}
