//! Structured-prediction building blocks for multi-agent task assignment.
//!
//! [`assign`] turns agent-task (`h`) and task-task (`g`) score tables into
//! assignments through argmax, a linear relaxation with greedy rounding, or a
//! quadratic relaxation optimized by Frank-Wolfe. [`scoring`] holds the
//! pairwise networks that produce those tables and the set-based critic used
//! while training. [`env`] is the contract environments implement so the
//! learner and the harness can drive them.

pub mod assign;
pub mod env;
pub mod scoring;

pub use assign::{
    Assignment, AssignError, ConstraintSet, FwConfig, Inference, RelaxedAssignment, ScoreTable,
};
