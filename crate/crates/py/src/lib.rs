//! Python bindings for `ical_core`.

use std::path::PathBuf;

use ical_core::acquisition::{self, AcquisitionConfig, Policy};
use ical_core::harness::{run_experiment as core_run, ExperimentConfig};
use ical_core::kernels::{self, KernelMatrix, KernelSpec};
use ical_core::models::{self, example1_model};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: ical_core::Error) -> PyErr {
    match e {
        ical_core::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn spec_from(scales: Option<Vec<f64>>) -> PyResult<KernelSpec> {
    match scales {
        Some(s) => KernelSpec::new(s).map_err(to_py),
        None => Ok(KernelSpec::default()),
    }
}

fn matrix_from(rows: Vec<Vec<f64>>) -> PyResult<KernelMatrix> {
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("kernel matrix must be square"));
    }
    KernelMatrix::new(m, rows.into_iter().flatten().collect()).map_err(to_py)
}

fn matrix_to(k: &KernelMatrix) -> Vec<Vec<f64>> {
    (0..k.m()).map(|i| k.row(i).to_vec()).collect()
}

/// Per-point samples of predictive distributions, shape (n_points, m, c).
#[pyclass(name = "PredictionTensor", module = "ical", frozen)]
struct PyPredictionTensor {
    inner: models::PredictionTensor,
}

#[pymethods]
impl PyPredictionTensor {
    /// Build from a nested list indexed [point][sample][class].
    #[new]
    fn new(values: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let n = values.len();
        let m = values.first().map_or(0, |p| p.len());
        let c = values.first().and_then(|p| p.first()).map_or(0, |s| s.len());
        if values.iter().any(|p| p.len() != m || p.iter().any(|s| s.len() != c)) {
            return Err(PyValueError::new_err("ragged prediction tensor"));
        }
        let flat: Vec<f64> = values.into_iter().flatten().flatten().collect();
        let inner = models::PredictionTensor::from_f64(n, m, c, &flat).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: models::load_predictions(&path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        models::save_predictions(&self.inner, &path).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.shape()
    }

    fn mean_predictive(&self, i: usize) -> PyResult<Vec<f64>> {
        self.check(i)?;
        Ok(self.inner.mean_predictive(i))
    }

    fn predictive_entropy(&self, i: usize) -> PyResult<f64> {
        self.check(i)?;
        Ok(self.inner.predictive_entropy(i))
    }

    /// Kernel matrix over the samples of point `i`.
    #[pyo3(signature = (i, scales=None))]
    fn kernel(&self, i: usize, scales: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.check(i)?;
        let k = self.inner.kernel(i, &spec_from(scales)?).map_err(to_py)?;
        Ok(matrix_to(&k))
    }

    fn __repr__(&self) -> String {
        let (n, m, c) = self.inner.shape();
        format!("PredictionTensor(n_points={n}, m={m}, c={c})")
    }
}

impl PyPredictionTensor {
    fn check(&self, i: usize) -> PyResult<()> {
        if i >= self.inner.n_points() {
            return Err(PyValueError::new_err(format!("point {i} out of range")));
        }
        Ok(())
    }
}

/// Rational-quadratic mixture kernel over rows of `samples`.
#[pyfunction]
#[pyo3(signature = (samples, scales=None))]
fn kernel_matrix(samples: Vec<Vec<f64>>, scales: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let dim = samples.first().map_or(0, |s| s.len());
    if samples.iter().any(|s| s.len() != dim) {
        return Err(PyValueError::new_err("samples must share one dimension"));
    }
    let flat: Vec<f64> = samples.into_iter().flatten().collect();
    let k = kernels::kernel_matrix(&flat, dim, &spec_from(scales)?).map_err(to_py)?;
    Ok(matrix_to(&k))
}

/// dHSIC of a list of kernel matrices.
#[pyfunction]
fn dhsic(kernels: Vec<Vec<Vec<f64>>>) -> PyResult<f64> {
    let mats = kernels.into_iter().map(matrix_from).collect::<PyResult<Vec<_>>>()?;
    let refs: Vec<&KernelMatrix> = mats.iter().collect();
    Ok(ical_core::dhsic::dhsic(&refs).map_err(to_py)?.value)
}

/// Two-variable HSIC via the centred trace.
#[pyfunction]
fn hsic2(k: Vec<Vec<f64>>, l: Vec<Vec<f64>>) -> PyResult<f64> {
    let (k, l) = (matrix_from(k)?, matrix_from(l)?);
    Ok(ical_core::dhsic::hsic2(&k, &l).map_err(to_py)?.value)
}

/// Choose a batch of pool indices with the named policy.
///
/// FASS without `features` clusters on the mean predictive distributions.
#[pyfunction]
#[pyo3(signature = (preds, policy, batch_size, seed=0, subsample=200, minibatch=1, fass_beta=10, features=None))]
#[allow(clippy::too_many_arguments)]
fn select(
    preds: &PyPredictionTensor,
    policy: &str,
    batch_size: usize,
    seed: u64,
    subsample: usize,
    minibatch: usize,
    fass_beta: usize,
    features: Option<Vec<Vec<f64>>>,
) -> PyResult<Vec<usize>> {
    let policy: Policy = policy.parse().map_err(PyValueError::new_err)?;
    let mut cfg = AcquisitionConfig::new(policy, batch_size).with_seed(seed);
    cfg.subsample = subsample;
    cfg.minibatch = minibatch;
    cfg.fass_beta = fass_beta;
    let features = match features {
        None if policy == Policy::Fass => Some(preds.inner.mean_predictives()),
        f => f,
    };
    let batch = acquisition::select(&preds.inner, features.as_deref(), &cfg).map_err(to_py)?;
    Ok(batch.indices)
}

/// Exact quantities of the ten-hypothesis example with `points` points.
#[pyfunction]
fn example1_stats(py: Python<'_>, points: usize) -> PyResult<Bound<'_, PyDict>> {
    if points < 2 {
        return Err(PyValueError::new_err("need at least 2 points"));
    }
    let model = example1_model(points).map_err(to_py)?;
    let rest: Vec<usize> = (1..points).collect();
    let others: Vec<usize> = (2..points).collect();
    let d = PyDict::new(py);
    d.set_item("mi_x1", model.exact_stats(0).map_err(to_py)?.mutual_information)?;
    d.set_item("mi_x2", model.exact_stats(1).map_err(to_py)?.mutual_information)?;
    d.set_item("entropy_after_x1", model.expected_posterior_entropy(0, &rest).map_err(to_py)?)?;
    d.set_item("entropy_after_x2", model.expected_posterior_entropy(1, &others).map_err(to_py)?)?;
    Ok(d)
}

/// Run an experiment from TOML text; returns one dict per round.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(to_py)?;
    let records = py.detach(|| core_run(&cfg)).map_err(to_py)?;
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("round", r.round)?;
            d.set_item("train_size", r.train_size)?;
            d.set_item("accuracy", r.accuracy)?;
            d.set_item("nll", r.nll)?;
            d.set_item("pool_entropy", r.pool_entropy)?;
            d.set_item("label_histogram", r.label_histogram.clone())?;
            d.set_item("acquired", r.acquired.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn ical(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPredictionTensor>()?;
    m.add_function(wrap_pyfunction!(kernel_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dhsic, m)?)?;
    m.add_function(wrap_pyfunction!(hsic2, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(example1_stats, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("POLICIES", Policy::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    Ok(())
}
