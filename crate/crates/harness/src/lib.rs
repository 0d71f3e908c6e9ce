//! Experiment orchestration: scenarios, evaluation against the rescue oracles
//! and battle heuristics, train-small/test-large sweeps, random hyperparameter
//! search and run directories.

pub mod config;
pub mod evaluate;
pub mod generalize;
pub mod run;
pub mod scenario;
pub mod search;

pub use config::{EvalSeeds, ExperimentConfig, CONFIG_SCHEMA_VERSION};
pub use evaluate::{evaluate_policy, standard_eval_seeds, LearnedPolicy, Policy, Report, EVAL_SEED_BASE};
pub use generalize::{generalization_sweep, write_sweep_csv, SweepRow};
pub use run::{code_version, train_experiment, RunDir, TrainOutcome};
pub use scenario::{EnvKind, Scenario};
pub use search::{hyperparameter_search, sample_configs, Law, SearchFile, SearchOutcome, SearchRun, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint does not fit the scenario: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Learner(#[from] swarmplan_learner::LearnerError),
    #[error(transparent)]
    Env(#[from] swarmplan_core::env::EnvError),
    #[error(transparent)]
    Scoring(#[from] swarmplan_core::scoring::ScoringError),
    #[error(transparent)]
    Oracle(#[from] swarmplan_rescue::OracleError),
    #[error(transparent)]
    Battle(#[from] swarmplan_battle::BattleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
