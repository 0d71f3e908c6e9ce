use serde::{Deserialize, Serialize};

use crate::{LearnerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// What the noise window remembers between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// The last `p` innovations; the perturbation is their sum.
    #[default]
    Innovation,
    /// The last `p` full residuals `H - h`, fed back into the next mean.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A2CConfig {
    pub gamma: f64,
    /// Variance of the total perturbation on each score entry.
    pub sigma: f64,
    /// Number of correlated steps.
    pub p: usize,
    /// Return length: at most this many steps per chunk.
    pub n_steps: usize,
    /// Policy-loss weight.
    pub lambda: f64,
    pub lr_policy: f64,
    pub lr_value: f64,
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Chunks gathered (across all workers) for each update.
    #[serde(default = "default_batch")]
    pub chunks_per_update: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_workers() -> usize {
    8
}

fn default_batch() -> usize {
    16
}

impl A2CConfig {
    pub fn rescue() -> Self {
        Self {
            gamma: 0.99,
            sigma: 0.5,
            p: 3,
            n_steps: 5,
            lambda: 1.0,
            lr_policy: 1e-3,
            lr_value: 1e-3,
            optimizer: OptimizerKind::Adam,
            noise_mode: NoiseMode::Innovation,
            workers: default_workers(),
            chunks_per_update: default_batch(),
            seed: 0,
        }
    }

    pub fn battle() -> Self {
        Self { gamma: 0.999, sigma: 1.0, ..Self::rescue() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LearnerError::Config(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if self.p < 1 {
            return bad("p must be at least 1");
        }
        if self.n_steps < 2 {
            return bad("n_steps must be at least 2");
        }
        let rates = [self.lambda, self.lr_policy, self.lr_value];
        if rates.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("lambda and learning rates must be finite and nonnegative");
        }
        if self.workers == 0 || self.chunks_per_update == 0 {
            return bad("workers and chunks_per_update must be positive");
        }
        Ok(())
    }
}

impl Default for A2CConfig {
    fn default() -> Self {
        Self::rescue()
    }
}
