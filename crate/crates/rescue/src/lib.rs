//! 16x16 search-and-rescue grid: ambulances move one cell per step toward
//! their assigned victim and pick up every victim they land on.

pub mod env;
pub mod grid;
pub mod oracles;

pub use env::{
    build_constraints, extract_features, spawn, GridState, RescueConfig, RescueEnv, StepRecord, Victim,
};
pub use grid::{chebyshev, low_level_move, Cell, GRID};
pub use oracles::{closest_baseline, dp_subset_paths, mvr_exact, OracleError, RoutePlan, SubsetPathTable};

/// Steps to solve as tabulated for comparison with published numbers: the
/// zero-based index of the final step of an episode.
pub fn steps_to_solve(episode_length: usize) -> f64 {
    episode_length as f64 - 1.0
}
