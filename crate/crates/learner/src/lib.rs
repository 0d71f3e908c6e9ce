//! Synchronous advantage actor-critic whose actions are the score tables fed
//! to an assignment inference procedure.
//!
//! Rollout workers perturb `h` (and `g`) with temporally correlated Gaussian
//! noise, run inference on the perturbed tables and step their environment.
//! A single updater turns the resulting chunks into n-step returns, an L1
//! value loss and an importance-weighted policy gradient.

pub mod config;
pub mod eval;
pub mod noise;
pub mod optim;
pub mod returns;
pub mod rollout;
pub mod train;
pub mod update;

use swarmplan_core::env::EnvError;
use swarmplan_core::scoring::ScoringError;
use swarmplan_core::AssignError;

pub use config::{A2CConfig, NoiseMode, OptimizerKind};
pub use eval::{evaluate, run_episode, EpisodeResult, EvalNoise, EvalSummary};
pub use noise::NoiseWindow;
pub use optim::Optimizer;
pub use returns::{chunk_returns, nstep_returns};
pub use rollout::{Actor, Chunk, Decision, EnvFactory, EpisodeStats, StepSample, Worker, TRAIN_SEED_BASE};
pub use train::{thread_pool, write_metrics_csv, Budget, EvalSpec, MetricsRow, Trainer, METRICS_HEADER};
pub use update::{a2c_gradients, composite_loss, freeze, gaussian_log_likelihood, Diagnostics, Frozen, Updater};

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = LearnerError> = std::result::Result<T, E>;
