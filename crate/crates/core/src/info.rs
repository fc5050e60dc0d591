//! Entropy helpers shared by the acquisition policies and metrics. Natural log throughout.

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
    // rounding can push a near-certain marginal just past 1
    (-s).max(0.0)
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest scores, sorted by score descending then index ascending.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_uniform_four() {
        assert!((entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn top_k_breaks_ties_by_index() {
        assert_eq!(top_k(&[1.0, 2.0, 2.0, 0.5], 3), vec![1, 2, 0]);
        assert_eq!(argmax(&[0.3, 0.3, 0.1]), 0);
    }
}
