//! Empirical dHSIC (biased V-statistic) over precomputed kernel matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::KernelMatrix;

/// Values in `(-NOISE_FLOOR, 0)` are treated as exact zeros.
pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhsicStatistic {
    pub value: f64,
    pub d: usize,
    pub m: usize,
    /// Set when `m < 2d`; the statistic is defined as zero there.
    pub degenerate: bool,
}

#[inline]
pub(crate) fn clamp_noise(v: f64) -> f64 {
    if v < 0.0 && v > -NOISE_FLOOR {
        0.0
    } else {
        v
    }
}

fn check(kernels: &[&KernelMatrix]) -> Result<usize> {
    if kernels.len() < 2 {
        return invalid(format!("dHSIC needs at least 2 variables, got {}", kernels.len()));
    }
    let m = kernels[0].m();
    if let Some(k) = kernels.iter().find(|k| k.m() != m) {
        return invalid(format!("kernel sizes differ: {m} vs {}", k.m()));
    }
    Ok(m)
}

/// Joint dependence of `d` variables given one kernel matrix each.
///
/// `(1/m^2) sum_ab prod_j K_j[a,b] + (1/m^2d) prod_j sum_ab K_j[a,b]
///  - (2/m^(d+1)) sum_a prod_j sum_b K_j[a,b]`
pub fn dhsic(kernels: &[&KernelMatrix]) -> Result<DhsicStatistic> {
    let m = check(kernels)?;
    let d = kernels.len();
    if m < 2 * d {
        return Ok(DhsicStatistic { value: 0.0, d, m, degenerate: true });
    }
    let mf = m as f64;

    let mut joint = 0.0;
    for idx in 0..m * m {
        let mut prod = 1.0;
        for k in kernels {
            prod *= k.as_slice()[idx];
        }
        joint += prod;
    }

    let row_sums: Vec<Vec<f64>> =
        kernels.iter().map(|k| (0..m).map(|a| k.row(a).iter().sum()).collect()).collect();

    let product_of_totals: f64 = row_sums.iter().map(|r| r.iter().sum::<f64>()).product();

    let cross: f64 = (0..m).map(|a| row_sums.iter().map(|r| r[a]).product::<f64>()).sum();

    let value = joint / mf.powi(2) + product_of_totals / mf.powi(2 * d as i32)
        - 2.0 * cross / mf.powi(d as i32 + 1);
    Ok(DhsicStatistic { value: clamp_noise(value), d, m, degenerate: false })
}

/// Doubly centred kernel `HKH`, reusable against many partner kernels.
#[derive(Debug, Clone)]
pub struct CenteredKernel {
    m: usize,
    data: Vec<f64>,
}

impl CenteredKernel {
    pub fn new(k: &KernelMatrix) -> Self {
        let m = k.m();
        let mf = m as f64;
        let rows: Vec<f64> = (0..m).map(|a| k.row(a).iter().sum::<f64>() / mf).collect();
        let grand = rows.iter().sum::<f64>() / mf;
        let mut data = Vec::with_capacity(m * m);
        for a in 0..m {
            let row = k.row(a);
            for b in 0..m {
                data.push(row[b] - rows[a] - rows[b] + grand);
            }
        }
        Self { m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `<K, HLH>_F / m^2` without the noise clamp or degenerate check.
    #[inline]
    pub fn raw_inner(&self, k: &KernelMatrix) -> f64 {
        debug_assert_eq!(k.m(), self.m);
        let s: f64 = self.data.iter().zip(k.as_slice()).map(|(a, b)| a * b).sum();
        s / (self.m * self.m) as f64
    }

    /// Two-variable statistic against `k`, with the same conventions as [`hsic2`].
    pub fn hsic_with(&self, k: &KernelMatrix) -> f64 {
        if self.m < 4 {
            return 0.0;
        }
        clamp_noise(self.raw_inner(k))
    }
}

/// Two-variable HSIC via the centred trace `tr(K H L H) / m^2`.
pub fn hsic2(k: &KernelMatrix, l: &KernelMatrix) -> Result<DhsicStatistic> {
    let m = check(&[k, l])?;
    if m < 4 {
        return Ok(DhsicStatistic { value: 0.0, d: 2, m, degenerate: true });
    }
    let value = CenteredKernel::new(l).hsic_with(k);
    Ok(DhsicStatistic { value, d: 2, m, degenerate: false })
}

/// Permutation p-value for independence of the variables behind `k` and `l`.
///
/// Rows and columns of `l` are permuted together; the result is
/// `(1 + #{perm stat >= observed}) / (1 + n_perms)`.
pub fn permutation_pvalue(k: &KernelMatrix, l: &KernelMatrix, n_perms: usize, seed: u64) -> Result<f64> {
    let m = check(&[k, l])?;
    if n_perms == 0 {
        return invalid("n_perms must be at least 1");
    }
    let centered = CenteredKernel::new(k);
    let observed = centered.hsic_with(l);
    let tol = 1e-12 * observed.abs().max(1e-300);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut permuted = vec![0.0; m * m];
    let mut hits = 0usize;
    for _ in 0..n_perms {
        perm.shuffle(&mut rng);
        for a in 0..m {
            let src = l.row(perm[a]);
            for b in 0..m {
                permuted[a * m + b] = src[perm[b]];
            }
        }
        let stat = centered.hsic_with(&KernelMatrix::from_raw(m, permuted.clone()));
        if stat >= observed - tol {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_perms + 1) as f64)
}
