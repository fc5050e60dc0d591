//! Batch active learning driven by kernel dependency between a candidate
//! batch's predictions and the predictions on the rest of the pool, plus the
//! usual uncertainty baselines, small Bayesian backends and an experiment
//! harness.
//!
//! The pieces, bottom up:
//!
//! - [`kernels`]: rational-quadratic mixture Gram matrices over Monte Carlo
//!   prediction samples, and their sums and means.
//! - [`dhsic`]: the empirical d-variable HSIC statistic, a two-variable fast
//!   path and a permutation test.
//! - [`acquisition`]: ICAL, ICAL-pointwise, Random, MaxEnt, BALD, BatchBALD and FASS.
//! - [`models`]: exact discrete-hypothesis posteriors, a bootstrap ensemble of
//!   linear classifiers, and the prediction-tensor file format.
//! - [`harness`]: the acquire, label, refit loop with per-round metrics.

pub mod acquisition;
pub mod datasets;
pub mod dhsic;
mod error;
pub mod harness;
pub mod info;
pub mod kernels;
pub mod models;

pub use error::{Error, Result};
