//! Experiment configuration, read from TOML.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionConfig;
use crate::error::{Error, Result};
use crate::models::TrainHyper;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Acquisition rounds `T`.
    pub rounds: usize,
    pub backend: BackendSpec,
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub metrics: MetricsToggles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSpec {
    /// Exact posterior over a finite hypothesis set.
    Discrete {
        task: DiscreteTask,
        /// Hypothesis that generates the true labels; drawn from the prior when absent.
        #[serde(default)]
        true_hypothesis: Option<usize>,
    },
    /// Bootstrap ensemble of linear classifiers, retrained from scratch each round.
    Ensemble {
        dataset: DatasetSpec,
        #[serde(default = "default_members")]
        members: usize,
        #[serde(default)]
        train: TrainHyper,
    },
    /// Fixed prediction tensor computed elsewhere; never retrained.
    External { predictions: PathBuf, labels: PathBuf },
}

fn default_members() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiscreteTask {
    Example1 { points: usize },
    Random {
        hypotheses: usize,
        points: usize,
        classes: usize,
        #[serde(default = "default_disagreement")]
        disagreement: f64,
        #[serde(default)]
        task_seed: u64,
    },
}

fn default_disagreement() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    Csv { path: PathBuf },
    /// Gaussian clusters centred on a ring.
    Blobs {
        classes: usize,
        per_class: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default)]
        task_seed: u64,
    },
}

fn default_radius() -> f64 {
    2.0
}

fn default_spread() -> f64 {
    1.0
}

/// How points are divided into the initial training set, the pool and the test set.
///
/// Explicit index lists take precedence. Otherwise `test_size` points are
/// drawn at random for testing, `initial_per_class` points per class seed the
/// training set, and everything left forms the pool.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default)]
    pub initial: Option<Vec<usize>>,
    #[serde(default)]
    pub initial_per_class: Option<usize>,
    #[serde(default)]
    pub pool: Option<Vec<usize>>,
    #[serde(default)]
    pub test: Option<Vec<usize>>,
    #[serde(default)]
    pub test_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsToggles {
    #[serde(default = "yes")]
    pub timing: bool,
    #[serde(default = "yes")]
    pub pool_entropy: bool,
}

fn yes() -> bool {
    true
}

impl Default for MetricsToggles {
    fn default() -> Self {
        Self { timing: true, pool_entropy: true }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_static()?;
        Ok(cfg)
    }

    /// Parses a config file; relative paths inside it resolve against the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.backend {
            BackendSpec::Ensemble { dataset: DatasetSpec::Csv { path }, .. } => fix(path),
            BackendSpec::External { predictions, labels } => {
                fix(predictions);
                fix(labels);
            }
            _ => {}
        }
    }

    pub fn policy_name(&self) -> &'static str {
        self.acquisition.policy.name()
    }

    /// Checks that do not need the backend's data.
    pub fn validate_static(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds: must be at least 1".into()));
        }
        self.acquisition
            .validate()
            .map_err(|e| Error::Config(format!("acquisition: {e}")))?;
        if let BackendSpec::Ensemble { members, .. } = &self.backend {
            if *members < 2 {
                return Err(Error::Config("backend.members: an ensemble needs at least 2 members".into()));
            }
        }
        let split = &self.split;
        if split.initial.is_some() && split.initial_per_class.is_some() {
            return Err(Error::Config("split: give either initial or initial_per_class, not both".into()));
        }
        if split.test.is_some() && split.test_size.is_some() {
            return Err(Error::Config("split: give either test or test_size, not both".into()));
        }
        let lists = [("initial", &split.initial), ("pool", &split.pool), ("test", &split.test)];
        for (name, list) in lists {
            if let Some(list) = list {
                let unique: HashSet<_> = list.iter().collect();
                if unique.len() != list.len() {
                    return Err(Error::Config(format!("split.{name}: duplicate indices")));
                }
            }
        }
        for (a, la) in lists {
            for (b, lb) in lists {
                if a < b {
                    if let (Some(la), Some(lb)) = (la, lb) {
                        let set: HashSet<_> = la.iter().collect();
                        if let Some(x) = lb.iter().find(|x| set.contains(x)) {
                            return Err(Error::Config(format!("split: index {x} appears in both {a} and {b}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "example1"
seed = 3
rounds = 1

[backend]
kind = "discrete"
task = { name = "example1", points = 50 }

[acquisition]
policy = "ical"
batch_size = 1
mc_samples = 256

[split]
initial = []
"#;

    #[test]
    fn parses_example_config() {
        let cfg = ExperimentConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.rounds, 1);
        assert_eq!(cfg.acquisition.subsample, 200);
        assert!(matches!(cfg.backend, BackendSpec::Discrete { task: DiscreteTask::Example1 { points: 50 }, .. }));
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_overlap_and_unknown_keys() {
        let overlap = EXAMPLE.replace("initial = []", "initial = [1]\ntest = [1, 2]");
        let err = ExperimentConfig::from_toml_str(&overlap).unwrap_err().to_string();
        assert!(err.contains("both initial and test"), "{err}");
        let unknown = EXAMPLE.replace("seed = 3", "seed = 3\nsed = 4");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
        let zero = EXAMPLE.replace("rounds = 1", "rounds = 0");
        assert!(ExperimentConfig::from_toml_str(&zero).is_err());
    }
}
