//! `ical` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage, config or input-format errors,
//! 3 for runtime failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ical_core::dhsic::dhsic;
use ical_core::harness::{output, report, run_experiment, ExperimentConfig};
use ical_core::kernels::{KernelMatrix, KernelSpec};
use ical_core::models::{example1_model, load_predictions};
use ical_core::Error;
use rayon::prelude::*;

#[derive(Debug, Parser)]
#[command(name = "ical", version, about = "Batch active learning with kernel dependency acquisition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an active-learning experiment from a TOML config.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run once per seed in parallel, writing into DIR/seed_<n>.
        #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
        seeds: Option<Vec<u64>>,
        /// Output directory for metrics.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Leave wall-clock timing out of the results so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print the dHSIC statistic of the kernels of selected points.
    Dhsic {
        /// Prediction tensor files. With one file every index selects from it;
        /// otherwise indices pair up with files, or a single index applies to all.
        #[arg(long, num_args = 1.., required = true)]
        tensors: Vec<PathBuf>,
        /// Comma-separated point indices, one variable each.
        #[arg(long, value_delimiter = ',', required = true)]
        point_indices: Vec<usize>,
        /// Comma-separated rational-quadratic mixture exponents.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Print the exact information quantities of the ten-hypothesis example.
    Example1 {
        /// Number of points (x_1 plus L-1 identical points).
        #[arg(long = "L", value_name = "N")]
        points: usize,
    },
    /// Merge run directories into per-policy mean/std curves (CSV).
    Report {
        /// Run directories (searched recursively for summary.json).
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::Format { .. } | Error::Csv(_) | Error::Json(_) => 2,
            Error::Io(_) | Error::InconsistentEvidence { .. } => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn run_one(cfg: &ExperimentConfig, out: &Path) -> Result<String, Failure> {
    let records = run_experiment(cfg)?;
    output::write_results(out, cfg, &records)?;
    let last = records.last().expect("at least the round-0 record");
    Ok(format!("final accuracy {:.6} nll {:.6} pool_entropy {:.6}", last.accuracy, last.nll, last.pool_entropy))
}

fn cmd_run(config: &Path, seed: Option<u64>, seeds: Option<Vec<u64>>, out: &Path, no_timing: bool) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::from_file(config).map_err(|e| match e {
        Error::Io(io) => usage(format!("cannot read {}: {io}", config.display())),
        other => other.into(),
    })?;
    if no_timing {
        cfg.metrics.timing = false;
    }
    match seeds {
        Some(seeds) => {
            let results: Vec<Result<(u64, String), Failure>> = seeds
                .par_iter()
                .map(|&s| {
                    let run_cfg = ExperimentConfig { seed: s, ..cfg.clone() };
                    Ok((s, run_one(&run_cfg, &out.join(format!("seed_{s}")))?))
                })
                .collect();
            for r in results {
                let (s, line) = r?;
                println!("seed {s}: {line}");
            }
        }
        None => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            println!("{}", run_one(&cfg, out)?);
        }
    }
    Ok(())
}

fn cmd_dhsic(tensors: &[PathBuf], indices: &[usize], scales: Option<Vec<f64>>) -> Result<(), Failure> {
    let spec = match scales {
        Some(s) => KernelSpec::new(s)?,
        None => KernelSpec::default(),
    };
    let loaded = tensors.iter().map(load_predictions).collect::<Result<Vec<_>, _>>()?;
    let shape = (loaded[0].m(), loaded[0].c());
    if let Some((path, t)) = tensors.iter().zip(&loaded).find(|(_, t)| (t.m(), t.c()) != shape) {
        return Err(usage(format!(
            "{} has m={}, c={} but the first tensor has m={}, c={}",
            path.display(),
            t.m(),
            t.c(),
            shape.0,
            shape.1
        )));
    }
    let pairs: Vec<(usize, usize)> = if loaded.len() == 1 {
        indices.iter().map(|&i| (0, i)).collect()
    } else if indices.len() == loaded.len() {
        indices.iter().copied().enumerate().collect()
    } else if indices.len() == 1 {
        (0..loaded.len()).map(|f| (f, indices[0])).collect()
    } else {
        return Err(usage(format!("{} indices do not match {} tensor files", indices.len(), loaded.len())));
    };
    let kernels = pairs
        .iter()
        .map(|&(f, i)| {
            if i >= loaded[f].n_points() {
                return Err(usage(format!("point index {i} out of range for {}", tensors[f].display())));
            }
            Ok(loaded[f].kernel(i, &spec)?)
        })
        .collect::<Result<Vec<KernelMatrix>, Failure>>()?;
    let refs: Vec<&KernelMatrix> = kernels.iter().collect();
    let stat = dhsic(&refs)?;
    println!("{:.12}", stat.value);
    if stat.degenerate {
        eprintln!("note: m = {} < 2d = {}, statistic defined as 0", stat.m, 2 * stat.d);
    }
    Ok(())
}

fn cmd_example1(points: usize) -> Result<(), Failure> {
    if points < 2 {
        return Err(usage(format!("--L must be at least 2, got {points}")));
    }
    let model = example1_model(points)?;
    let rest: Vec<usize> = (1..points).collect();
    let mi_first = model.exact_stats(0)?.mutual_information;
    let mi_rest = model.exact_stats(1)?.mutual_information;
    let after_first = model.expected_posterior_entropy(0, &rest)?;
    // acquiring any x_i, i >= 2, settles every other copy
    let others: Vec<usize> = (2..points).collect();
    let after_rest = model.expected_posterior_entropy(1, &others)?;
    println!("mi_x1 {mi_first:.6}");
    println!("mi_x2_to_xL {mi_rest:.6}");
    println!("expected_entropy_after_x1 {after_first:.6}");
    println!("expected_entropy_after_x2 {after_rest:.6}");
    Ok(())
}

fn cmd_report(results: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let runs = report::load_runs(results).map_err(|e| match e {
        Error::Io(io) => usage(format!("cannot read results: {io}")),
        other => other.into(),
    })?;
    let text = report::merge_runs(&runs)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::from)?;
    }
    fs::write(out, text).map_err(Error::from)?;
    println!("merged {} runs into {}", runs.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, seeds, out, no_timing } => cmd_run(&config, seed, seeds, &out, no_timing),
        Command::Dhsic { tensors, point_indices, scales } => cmd_dhsic(&tensors, &point_indices, scales),
        Command::Example1 { points } => cmd_example1(points),
        Command::Report { results, out } => cmd_report(&results, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
