//! Merges run directories into per-policy mean and standard-deviation curves.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::FORMAT_VERSION;
use super::output::{read_summary, RunSummary, SUMMARY_FILE};
use crate::error::{Error, Result};

/// Every `summary.json` at or below `root`.
pub fn find_summaries(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    if root.is_file() {
        found.push(root.to_path_buf());
        return Ok(found);
    }
    let direct = root.join(SUMMARY_FILE);
    if direct.is_file() {
        found.push(direct);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(root)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for entry in entries {
        if entry.is_dir() {
            found.extend(find_summaries(&entry)?);
        }
    }
    Ok(found)
}

/// Loads every run summary found under `roots`.
pub fn load_runs(roots: &[PathBuf]) -> Result<Vec<RunSummary>> {
    let mut runs = Vec::new();
    for root in roots {
        let found = find_summaries(root)?;
        if found.is_empty() {
            return Err(Error::Config(format!("no {SUMMARY_FILE} under {}", root.display())));
        }
        for path in found {
            runs.push(read_summary(&path)?);
        }
    }
    Ok(runs)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation per policy and round.
pub fn merge_runs(runs: &[RunSummary]) -> Result<String> {
    if let Some(bad) = runs.iter().find(|r| r.format_version != FORMAT_VERSION) {
        return Err(Error::Config(format!(
            "summary format_version {} is not supported (expected {FORMAT_VERSION})",
            bad.format_version
        )));
    }
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for run in runs {
        groups.entry(run.policy.as_str()).or_default().push(run);
    }

    let mut out = String::from("# std columns are population standard deviations (divide by n)\n");
    out.push_str(
        "format_version,policy,round,n_runs,train_size_mean,accuracy_mean,accuracy_std,nll_mean,nll_std,\
         pool_entropy_mean,pool_entropy_std,label_histogram_mean\n",
    );
    for (policy, members) in groups {
        let rounds = members.iter().map(|r| r.records.len()).max().unwrap_or(0);
        for round in 0..rounds {
            let at: Vec<_> = members.iter().filter_map(|r| r.records.get(round)).collect();
            let pick = |f: fn(&super::MetricsRecord) -> f64| at.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (train, _) = mean_std(&pick(|r| r.train_size as f64));
            let (acc, acc_sd) = mean_std(&pick(|r| r.accuracy));
            let (nll, nll_sd) = mean_std(&pick(|r| r.nll));
            let (ent, ent_sd) = mean_std(&pick(|r| r.pool_entropy));
            let classes = at.iter().map(|r| r.label_histogram.len()).max().unwrap_or(0);
            let hist: Vec<String> = (0..classes)
                .map(|k| {
                    let total: usize = at.iter().map(|r| r.label_histogram.get(k).copied().unwrap_or(0)).sum();
                    format!("{}", total as f64 / at.len() as f64)
                })
                .collect();
            out.push_str(&format!(
                "{FORMAT_VERSION},{policy},{round},{},{train},{acc},{acc_sd},{nll},{nll_sd},{ent},{ent_sd},{}\n",
                at.len(),
                hist.join(";")
            ));
        }
    }
    Ok(out)
}
