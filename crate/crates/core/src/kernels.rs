//! Rational-quadratic mixture kernels over Monte Carlo prediction samples.
//!
//! Each point contributes an `m x m` Gram matrix whose entries compare two of
//! its sampled predictive distributions. Sums and averages of these matrices
//! are again valid kernels, which is what lets the acquisition code collapse a
//! whole pool into a single matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_SCALES: [f64; 5] = [0.2, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[default]
    RationalQuadraticMixture,
}

/// Kernel family plus the mixture exponents `a`.
///
/// Each component is `(1 + |u - v|^2 / (2a))^(-a)` with unit amplitude and
/// unit length-scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default)]
    pub family: KernelFamily,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
}

fn default_scales() -> Vec<f64> {
    DEFAULT_SCALES.to_vec()
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { family: KernelFamily::default(), scales: default_scales() }
    }
}

impl KernelSpec {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        let spec = Self { family: KernelFamily::RationalQuadraticMixture, scales };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return invalid("kernel scale list is empty");
        }
        if let Some(bad) = self.scales.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return invalid(format!("kernel scale {bad} is not strictly positive"));
        }
        Ok(())
    }

    /// Kernel value for a squared distance.
    #[inline]
    pub fn eval_sq_dist(&self, d2: f64) -> f64 {
        if d2 == 0.0 {
            return self.scales.len() as f64;
        }
        self.scales.iter().map(|&a| (1.0 + d2 / (2.0 * a)).powf(-a)).sum()
    }
}

/// Dense symmetric `m x m` Gram matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    m: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    /// Validating constructor: square, finite and exactly symmetric.
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || data.len() != m * m {
            return invalid(format!("kernel data of length {} is not a non-empty {m}x{m} matrix", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("kernel matrix has non-finite entries");
        }
        for i in 0..m {
            for j in 0..i {
                if data[i * m + j] != data[j * m + i] {
                    return invalid(format!("kernel matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { m, data })
    }

    pub fn zeros(m: usize) -> Self {
        Self { m, data: vec![0.0; m * m] }
    }

    pub fn constant(m: usize, value: f64) -> Self {
        Self { m, data: vec![value; m * m] }
    }

    pub(crate) fn from_raw(m: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), m * m);
        Self { m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn add_assign(&mut self, other: &KernelMatrix) {
        debug_assert_eq!(self.m, other.m);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scaled(&self, factor: f64) -> KernelMatrix {
        Self { m: self.m, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Returns `true` when every entry equals the first one.
    pub fn is_constant(&self) -> bool {
        self.data.iter().all(|&v| v == self.data[0])
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        let mat = DMatrix::from_row_slice(self.m, self.m, &self.data);
        let eig = SymmetricEigen::new(mat).eigenvalues;
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// PSD check with the relative tolerance `min_eig >= -tol * max(max_eig, 0)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let (lo, hi) = self.eigen_range();
        lo >= -tol * hi.max(0.0)
    }
}

/// Gram matrix of `samples` (row-major, `m` rows of length `dim`).
pub fn kernel_matrix(samples: &[f64], dim: usize, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    if dim == 0 || !samples.len().is_multiple_of(dim) {
        return invalid(format!("sample buffer of length {} is not a multiple of dim {dim}", samples.len()));
    }
    let m = samples.len() / dim;
    if m < 2 {
        return invalid(format!("need at least 2 samples, got {m}"));
    }
    if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
        return invalid(format!("sample row {} is not finite", pos / dim));
    }
    Ok(gram(samples.chunks_exact(dim), m, spec))
}

/// Same as [`kernel_matrix`] for `f32` rows, as stored in a prediction tensor.
pub fn kernel_matrix_f32(samples: &[f32], dim: usize, spec: &KernelSpec) -> Result<KernelMatrix> {
    let widened: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
    kernel_matrix(&widened, dim, spec)
}

fn gram<'a>(rows: impl Iterator<Item = &'a [f64]>, m: usize, spec: &KernelSpec) -> KernelMatrix {
    let rows: Vec<&[f64]> = rows.collect();
    let mut data = vec![0.0; m * m];
    let diag = spec.scales.len() as f64;
    for i in 0..m {
        data[i * m + i] = diag;
        for j in 0..i {
            let d2: f64 = rows[i].iter().zip(rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = spec.eval_sq_dist(d2);
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    KernelMatrix::from_raw(m, data)
}

fn check_same_m(matrices: &[&KernelMatrix]) -> Result<usize> {
    let Some(first) = matrices.first() else {
        return invalid("kernel list is empty");
    };
    let m = first.m();
    if let Some(bad) = matrices.iter().find(|k| k.m() != m) {
        return invalid(format!("kernel sizes differ: {m} vs {}", bad.m()));
    }
    Ok(m)
}

/// Entrywise sum.
pub fn sum_kernels(matrices: &[&KernelMatrix]) -> Result<KernelMatrix> {
    let m = check_same_m(matrices)?;
    let mut acc = KernelMatrix::zeros(m);
    for k in matrices {
        acc.add_assign(k);
    }
    Ok(acc)
}

/// Entrywise mean.
pub fn mean_kernels(matrices: &[&KernelMatrix]) -> Result<KernelMatrix> {
    let n = matrices.len() as f64;
    let mut acc = sum_kernels(matrices)?;
    for v in acc.data.iter_mut() {
        *v /= n;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_give_scale_count() {
        let samples = vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7];
        let k = kernel_matrix(&samples, 2, &KernelSpec::default()).unwrap();
        assert!(k.as_slice().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn single_scale_unit_distance() {
        let spec = KernelSpec::new(vec![1.0]).unwrap();
        let k = kernel_matrix(&[0.0, 1.0], 1, &spec).unwrap();
        assert!((k.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.get(0, 0), 1.0);
    }

    #[test]
    fn two_scales_distance_two() {
        let spec = KernelSpec::new(vec![0.5, 2.0]).unwrap();
        let k = kernel_matrix(&[0.0, 2.0], 1, &spec).unwrap();
        let expected = 5f64.powf(-0.5) + 0.25;
        assert!((k.get(1, 0) - expected).abs() < 1e-15);
        assert!((k.get(1, 0) - 0.6972).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = KernelSpec::default();
        assert!(kernel_matrix(&[0.0, 1.0], 2, &spec).is_err());
        assert!(kernel_matrix(&[0.0, f64::NAN], 1, &spec).is_err());
        assert!(KernelSpec::new(vec![]).is_err());
        assert!(KernelSpec::new(vec![1.0, -0.5]).is_err());
        assert!(sum_kernels(&[]).is_err());
        let a = KernelMatrix::zeros(2);
        let b = KernelMatrix::zeros(3);
        assert!(sum_kernels(&[&a, &b]).is_err());
        assert!(mean_kernels(&[&a, &b]).is_err());
    }

    #[test]
    fn sum_and_mean_identities() {
        let spec = KernelSpec::default();
        let k = kernel_matrix(&[0.1, 0.9, 0.4, 0.6, 0.8, 0.2], 2, &spec).unwrap();
        let z = KernelMatrix::zeros(3);
        assert_eq!(sum_kernels(&[&k]).unwrap(), k);
        assert_eq!(sum_kernels(&[&k, &z]).unwrap(), k);
        assert_eq!(mean_kernels(&[&k]).unwrap(), k);
        assert_eq!(mean_kernels(&[&k, &k]).unwrap(), k);
    }

    #[test]
    fn mean_is_half_sum() {
        let spec = KernelSpec::default();
        let a = kernel_matrix(&[0.1, 0.9, 0.4, 0.6, 0.8, 0.2], 2, &spec).unwrap();
        let b = kernel_matrix(&[0.5, 0.5, 1.0, 0.0, 0.0, 1.0], 2, &spec).unwrap();
        let mean = mean_kernels(&[&a, &b]).unwrap();
        let half = sum_kernels(&[&a, &b]).unwrap().scaled(0.5);
        for (x, y) in mean.as_slice().iter().zip(half.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_asymmetry() {
        assert!(KernelMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(KernelMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]).is_ok());
    }
}
