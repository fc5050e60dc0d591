//! Batch acquisition policies.
//!
//! Every policy maps a [`PredictionTensor`] over the unlabelled pool to an
//! [`AcquisitionBatch`] of pool positions. Ties always resolve to the lowest
//! pool index, and all randomness flows from `AcquisitionConfig::seed`.

mod baselines;
mod fass;
mod ical;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{score_bald, select_bald, select_batchbald, select_maxent, select_random, BATCHBALD_EXACT_LIMIT};
pub use fass::select_fass;
pub use ical::{
    score_ical, select_ical, select_ical_pointwise, select_ical_pointwise_with_kernels, select_ical_with_kernels,
    RATIO_FLOOR,
};

use crate::error::{invalid, Result};
use crate::kernels::KernelSpec;
use crate::models::PredictionTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Ical,
    IcalPointwise,
    Random,
    #[serde(rename = "maxent")]
    MaxEnt,
    Bald,
    #[serde(rename = "batchbald")]
    BatchBald,
    Fass,
}

impl Policy {
    pub const ALL: [Policy; 7] = [
        Policy::Ical,
        Policy::IcalPointwise,
        Policy::Random,
        Policy::MaxEnt,
        Policy::Bald,
        Policy::BatchBald,
        Policy::Fass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Ical => "ical",
            Policy::IcalPointwise => "ical-pointwise",
            Policy::Random => "random",
            Policy::MaxEnt => "maxent",
            Policy::Bald => "bald",
            Policy::BatchBald => "batchbald",
            Policy::Fass => "fass",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub policy: Policy,
    /// `B`, points per acquired batch.
    pub batch_size: usize,
    /// `r`, pool points compared against per greedy addition.
    #[serde(default = "AcquisitionConfig::default_subsample")]
    pub subsample: usize,
    /// `L`, points added per greedy iteration.
    #[serde(default = "AcquisitionConfig::default_minibatch")]
    pub minibatch: usize,
    /// Monte Carlo samples requested from the backend.
    #[serde(default = "AcquisitionConfig::default_mc_samples")]
    pub mc_samples: usize,
    /// FASS keeps the `fass_beta * B` most uncertain points before subselecting.
    #[serde(default = "AcquisitionConfig::default_beta")]
    pub fass_beta: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: KernelSpec,
}

impl AcquisitionConfig {
    fn default_subsample() -> usize {
        200
    }
    fn default_minibatch() -> usize {
        1
    }
    fn default_mc_samples() -> usize {
        64
    }
    fn default_beta() -> usize {
        10
    }

    pub fn new(policy: Policy, batch_size: usize) -> Self {
        Self {
            policy,
            batch_size,
            subsample: Self::default_subsample(),
            minibatch: Self::default_minibatch(),
            mc_samples: Self::default_mc_samples(),
            fass_beta: Self::default_beta(),
            seed: 0,
            kernel: KernelSpec::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return invalid("batch_size must be at least 1");
        }
        if self.minibatch == 0 || self.minibatch > self.batch_size {
            return invalid(format!("minibatch {} must lie in [1, batch_size = {}]", self.minibatch, self.batch_size));
        }
        if self.subsample == 0 {
            return invalid("subsample must be at least 1");
        }
        if self.fass_beta == 0 {
            return invalid("fass_beta must be at least 1");
        }
        if self.mc_samples < 4 {
            return invalid(format!("mc_samples must be at least 4, got {}", self.mc_samples));
        }
        self.kernel.validate()
    }
}

/// Ordered, duplicate-free pool positions chosen in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionBatch {
    pub indices: Vec<usize>,
    /// Score of each point at the moment it was added, when the policy has one.
    pub scores: Option<Vec<f64>>,
}

impl AcquisitionBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub(crate) fn check_pool(pool: usize, cfg: &AcquisitionConfig) -> Result<()> {
    cfg.validate()?;
    if pool < cfg.batch_size {
        return invalid(format!("pool of {pool} points is smaller than batch size {}", cfg.batch_size));
    }
    Ok(())
}

/// Runs `cfg.policy`. `features` is required by FASS only.
pub fn select(preds: &PredictionTensor, features: Option<&[Vec<f64>]>, cfg: &AcquisitionConfig) -> Result<AcquisitionBatch> {
    match cfg.policy {
        Policy::Ical => select_ical(preds, cfg),
        Policy::IcalPointwise => select_ical_pointwise(preds, cfg),
        Policy::Random => select_random(preds.n_points(), cfg),
        Policy::MaxEnt => select_maxent(preds, cfg),
        Policy::Bald => select_bald(preds, cfg),
        Policy::BatchBald => select_batchbald(preds, cfg),
        Policy::Fass => match features {
            Some(f) => select_fass(preds, f, cfg),
            None => invalid("FASS needs pool features"),
        },
    }
}
