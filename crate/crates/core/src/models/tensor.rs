use crate::error::{invalid, Result};
use crate::info::entropy;
use crate::kernels::{kernel_matrix_f32, KernelMatrix, KernelSpec};

/// Tolerance on `sum_c p = 1` for every predictive slice.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Monte Carlo predictive samples: `n_points x m x c`, point-major, class-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTensor {
    n_points: usize,
    m: usize,
    c: usize,
    values: Vec<f32>,
}

impl PredictionTensor {
    pub fn new(n_points: usize, m: usize, c: usize, values: Vec<f32>) -> Result<Self> {
        if m == 0 || c == 0 {
            return invalid(format!("tensor needs m >= 1 and c >= 1, got m={m}, c={c}"));
        }
        if values.len() != n_points * m * c {
            return invalid(format!("expected {} values for shape ({n_points}, {m}, {c}), got {}", n_points * m * c, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return invalid(format!("value {} at flat index {pos} is outside [0, 1]", values[pos]));
        }
        for (s, slice) in values.chunks_exact(c).enumerate() {
            let total: f64 = slice.iter().map(|&v| v as f64).sum();
            if (total - 1.0).abs() > SIMPLEX_TOL {
                return invalid(format!("slice {s} (point {}, sample {}) sums to {total}", s / m, s % m));
            }
        }
        Ok(Self { n_points, m, c, values })
    }

    /// Builds a tensor from `f64` probabilities, rounding to storage precision.
    pub fn from_f64(n_points: usize, m: usize, c: usize, values: &[f64]) -> Result<Self> {
        Self::new(n_points, m, c, values.iter().map(|&v| v as f32).collect())
    }

    /// Single-sample tensor holding one predictive distribution per point.
    pub fn from_marginals(marginals: &[Vec<f64>]) -> Result<Self> {
        let c = marginals.first().map_or(1, Vec::len);
        let flat: Vec<f64> = marginals.iter().flatten().copied().collect();
        Self::from_f64(marginals.len(), 1, c, &flat)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_points, self.m, self.c)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// All `m x c` samples of one point.
    pub fn point(&self, i: usize) -> &[f32] {
        let w = self.m * self.c;
        &self.values[i * w..(i + 1) * w]
    }

    pub fn sample(&self, i: usize, t: usize) -> &[f32] {
        let start = (i * self.m + t) * self.c;
        &self.values[start..start + self.c]
    }

    /// Mean predictive distribution of point `i`.
    pub fn mean_predictive(&self, i: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.c];
        for t in 0..self.m {
            for (acc, &v) in mean.iter_mut().zip(self.sample(i, t)) {
                *acc += v as f64;
            }
        }
        let m = self.m as f64;
        mean.iter_mut().for_each(|v| *v /= m);
        mean
    }

    pub fn mean_predictives(&self) -> Vec<Vec<f64>> {
        (0..self.n_points).map(|i| self.mean_predictive(i)).collect()
    }

    pub fn predictive_entropy(&self, i: usize) -> f64 {
        entropy(&self.mean_predictive(i))
    }

    /// Expected entropy of the per-sample predictive, `E_w H[y | x, w]`.
    pub fn expected_conditional_entropy(&self, i: usize) -> f64 {
        let total: f64 = (0..self.m)
            .map(|t| entropy(&self.sample(i, t).iter().map(|&v| v as f64).collect::<Vec<_>>()))
            .sum();
        total / self.m as f64
    }

    /// Kernel matrix over the samples of point `i`.
    pub fn kernel(&self, i: usize, spec: &KernelSpec) -> Result<KernelMatrix> {
        kernel_matrix_f32(self.point(i), self.c, spec)
    }

    /// Kernel matrix for every point.
    pub fn kernels(&self, spec: &KernelSpec) -> Result<Vec<KernelMatrix>> {
        use rayon::prelude::*;
        (0..self.n_points).into_par_iter().map(|i| self.kernel(i, spec)).collect()
    }

    /// Sub-tensor with the given points, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let w = self.m * self.c;
        let mut values = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            if i >= self.n_points {
                return invalid(format!("point index {i} out of range for {} points", self.n_points));
            }
            values.extend_from_slice(self.point(i));
        }
        Ok(Self { n_points: indices.len(), m: self.m, c: self.c, values })
    }
}
