//! What an environment exposes to the assignment policy and the learner.

use ndarray::Array3;
use thiserror::Error;

use crate::assign::{Assignment, ConstraintSet};
pub use crate::scoring::Entity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("episode already finished")]
    Finished,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Everything the scoring model, the inference procedure and the critic see at one step.
#[derive(Debug, Clone)]
pub struct Observation {
    pub agent_feats: Vec<Vec<f64>>,
    pub task_feats: Vec<Vec<f64>>,
    /// Extra per-pair features, `n x m x k`.
    pub pair_extras: Option<Array3<f64>>,
    pub constraints: ConstraintSet,
    /// Whole-state view for the critic.
    pub entities: Vec<Entity>,
}

impl Observation {
    pub fn n(&self) -> usize {
        self.agent_feats.len()
    }

    pub fn m(&self) -> usize {
        self.task_feats.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
}

/// An episodic multi-agent environment driven by agent-task assignments.
pub trait TaskEnv: Send {
    fn observe(&self) -> Observation;

    fn step(&mut self, assignment: &Assignment) -> Result<Transition, EnvError>;

    fn is_done(&self) -> bool;

    /// True when the episode ended because it hit its step or frame cap.
    fn hit_cap(&self) -> bool;

    /// Number of assignment steps taken so far.
    fn steps(&self) -> usize;

    /// Whether the finished episode counts as a win, for environments with that notion.
    fn won(&self) -> Option<bool> {
        None
    }
}
