use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarmplan_core::Inference;
use swarmplan_learner::{A2CConfig, Budget};

use crate::evaluate::standard_eval_seeds;
use crate::scenario::{EnvKind, Scenario};
use crate::{HarnessError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Either an explicit list or `count` consecutive standard seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EvalSeeds {
    List(Vec<u64>),
    Standard { standard: usize },
}

impl EvalSeeds {
    pub fn resolve(&self) -> Vec<u64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Standard { standard } => standard_eval_seeds(*standard),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Vec<u64>> {
        let s: EvalSeeds = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(s.resolve())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub environment: EnvKind,
    pub scenario: String,
    pub inference: String,
    pub a2c: A2CConfig,
    pub eval_seeds: EvalSeeds,
    pub output_dir: PathBuf,
    pub budget: Budget,
    /// Updates between held-out evaluations during training; 0 evaluates only at the end.
    #[serde(default)]
    pub eval_every: u64,
    /// Seeds (a prefix of `eval_seeds`) used by the evaluations during training.
    #[serde(default = "default_train_eval")]
    pub train_eval_episodes: usize,
}

fn default_train_eval() -> usize {
    200
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::parse(self.environment, &self.scenario)
    }

    pub fn inference(&self) -> Result<Inference> {
        Inference::parse(&self.inference)
            .ok_or_else(|| HarnessError::Config(format!("unknown inference procedure {:?}", self.inference)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "config schema version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.scenario()?;
        self.inference()?;
        self.a2c.validate()?;
        if self.eval_seeds.resolve().is_empty() {
            return Err(HarnessError::Config("eval_seeds is empty".into()));
        }
        Ok(())
    }
}
