//! Result files: `metrics.csv` (one row per round) and `summary.json`.
//!
//! CSV columns, in order: `format_version, round, train_size, accuracy, nll,
//! pool_entropy, [batch_seconds,] label_histogram, acquired`. The two list
//! columns are `;`-separated. `batch_seconds` is omitted when timing is off.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FORMAT_VERSION};
use super::metrics::MetricsRecord;
use crate::error::Result;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format_version: u32,
    pub name: Option<String>,
    pub policy: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub records: Vec<MetricsRecord>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

pub fn metrics_csv(records: &[MetricsRecord], include_timing: bool) -> String {
    let mut out = String::from("format_version,round,train_size,accuracy,nll,pool_entropy,");
    if include_timing {
        out.push_str("batch_seconds,");
    }
    out.push_str("label_histogram,acquired\n");
    for r in records {
        out.push_str(&format!(
            "{FORMAT_VERSION},{},{},{},{},{},",
            r.round, r.train_size, r.accuracy, r.nll, r.pool_entropy
        ));
        if include_timing {
            out.push_str(&r.batch_seconds.map_or(String::new(), |s| format!("{s:.6}")));
            out.push(',');
        }
        out.push_str(&format!("{},{}\n", join(&r.label_histogram), join(&r.acquired)));
    }
    out
}

/// Writes both result files into `dir`, creating it if needed.
pub fn write_results(dir: &Path, cfg: &ExperimentConfig, records: &[MetricsRecord]) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(METRICS_FILE);
    fs::write(&csv_path, metrics_csv(records, cfg.metrics.timing))?;
    let summary = RunSummary {
        format_version: FORMAT_VERSION,
        name: cfg.name.clone(),
        policy: cfg.policy_name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        records: records.to_vec(),
    };
    let json_path = dir.join(SUMMARY_FILE);
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok((csv_path, json_path))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(round: usize) -> MetricsRecord {
        MetricsRecord {
            round,
            train_size: 3 + round,
            accuracy: 0.5,
            nll: 0.7,
            pool_entropy: 0.25,
            label_histogram: vec![round, 0],
            batch_seconds: Some(0.125),
            acquired: vec![round * 2],
        }
    }

    #[test]
    fn csv_layout() {
        let text = metrics_csv(&[record(0), record(1)], true);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "format_version,round,train_size,accuracy,nll,pool_entropy,batch_seconds,label_histogram,acquired");
        assert_eq!(lines[2], "1,1,4,0.5,0.7,0.25,0.125000,1;0,2");
        let untimed = metrics_csv(&[record(0)], false);
        assert!(!untimed.contains("batch_seconds"));
    }
}
