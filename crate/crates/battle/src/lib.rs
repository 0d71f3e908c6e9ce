//! Simplified real-time combat: two teams of units on an open arena, with
//! scripted targeting heuristics and an environment that lets a policy pick
//! a target for each of our units every few frames.

pub mod env;
pub mod heuristics;
pub mod sim;
pub mod spec;

pub use env::{
    build_battle_constraints, extract_battle_features, feature_dim, unit_features, window_reward, write_replay,
    BattleEnv, FrameRecord, UnitFrame,
};
pub use heuristics::{no_overkill_fill, weakest_closest_order, Heuristic, HeuristicKind};
pub use sim::{anchor_gap, dist, spawn_battle, BattleConfig, BattleState, Outcome, Team, Unit, ARENA};
pub use spec::{default_catalog, parse_catalog, ResolvedScenario, Scenario, UnitCatalog, UnitSpec, UnitStats};

#[derive(Debug, thiserror::Error)]
pub enum BattleError {
    #[error("invalid configuration: {0}")]
    Config(String),
}
