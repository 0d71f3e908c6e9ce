//! Direct-Model scoring networks and the set critic, with hand-written backward passes.

mod checkpoint;
mod critic;
pub mod gradcheck;
mod mlp;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_VERSION};
pub use critic::{CriticGrads, CriticParams};
pub use mlp::{Dense, InitScheme, Mlp, MlpCache, HIDDEN};
pub use model::{ModelGrads, PairInputs, ScoringModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("critic needs at least one entity")]
    EmptyState,
    #[error("activation cache does not match the network")]
    StaleCache,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, ScoringError>;

/// One element of the whole-state view fed to the critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: usize,
    pub features: Vec<f64>,
}

impl Entity {
    pub fn new(kind: usize, features: Vec<f64>) -> Self {
        Self { kind, features }
    }
}
