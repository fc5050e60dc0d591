//! Filter-then-subselect: keep the most uncertain points, then pick a
//! representative subset per predicted label with a facility-location objective.

use super::{check_pool, AcquisitionBatch, AcquisitionConfig};
use crate::error::{invalid, Result};
use crate::info::{argmax, top_k};
use crate::models::PredictionTensor;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn select_fass(preds: &PredictionTensor, features: &[Vec<f64>], cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    let n = preds.n_points();
    check_pool(n, cfg)?;
    if features.len() != n {
        return invalid(format!("{} feature rows for {n} pool points", features.len()));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("pool features must be finite");
    }

    let entropies: Vec<f64> = (0..n).map(|i| preds.predictive_entropy(i)).collect();
    let keep = cfg.fass_beta.saturating_mul(cfg.batch_size).min(n);
    let filtered = top_k(&entropies, keep);
    let labels: Vec<usize> = filtered.iter().map(|&i| argmax(&preds.mean_predictive(i))).collect();

    let mut offset: f64 = 0.0;
    for (a, &i) in filtered.iter().enumerate() {
        for &j in &filtered[..a] {
            offset = offset.max(sq_dist(&features[i], &features[j]));
        }
    }

    // coverage[a]: best similarity of filtered point a to a selected point with the same label
    let mut coverage = vec![0.0f64; filtered.len()];
    let mut taken = vec![false; filtered.len()];
    let mut indices = Vec::with_capacity(cfg.batch_size);
    let mut gains = Vec::with_capacity(cfg.batch_size);
    while indices.len() < cfg.batch_size {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..filtered.len() {
            if taken[s] {
                continue;
            }
            let gain: f64 = (0..filtered.len())
                .filter(|&a| labels[a] == labels[s])
                .map(|a| (offset - sq_dist(&features[filtered[a]], &features[filtered[s]]) - coverage[a]).max(0.0))
                .sum();
            let better = match best {
                None => true,
                Some((b, g)) => gain > g || (gain == g && filtered[s] < filtered[b]),
            };
            if better {
                best = Some((s, gain));
            }
        }
        let (s, gain) = best.expect("filtered set holds at least batch_size points");
        taken[s] = true;
        for a in 0..filtered.len() {
            if labels[a] == labels[s] {
                let w = offset - sq_dist(&features[filtered[a]], &features[filtered[s]]);
                coverage[a] = coverage[a].max(w);
            }
        }
        indices.push(filtered[s]);
        gains.push(gain);
    }
    Ok(AcquisitionBatch { indices, scores: Some(gains) })
}
