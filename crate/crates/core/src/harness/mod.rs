//! Active-learning experiment runner and its metrics and result files.

mod backend;
mod config;
mod experiment;
mod metrics;
pub mod output;
pub mod report;

pub use config::{
    BackendSpec, DatasetSpec, DiscreteTask, ExperimentConfig, MetricsToggles, SplitSpec, FORMAT_VERSION,
};
pub use experiment::{run_experiment, timing_profile, TimingRow};
pub use metrics::{accuracy, label_histogram, mean_predictive_entropy, nll, MetricsRecord, NLL_FLOOR};
