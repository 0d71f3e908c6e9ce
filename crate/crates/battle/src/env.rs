use std::io::Write;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};
use swarmplan_core::env::{EnvError, Observation, TaskEnv, Transition};
use swarmplan_core::scoring::Entity;
use swarmplan_core::{Assignment, ConstraintSet};

use crate::sim::{dist, spawn_battle, BattleConfig, BattleState, Outcome, Team, Unit, ARENA};

pub const PAIR_EXTRAS: usize = 2;
pub const BASE_FEATURES: usize = 8;

/// Per-unit feature count: the base eight plus a one-hot type when a scenario mixes types.
pub fn feature_dim(n_types: usize) -> usize {
    BASE_FEATURES + if n_types > 1 { n_types } else { 0 }
}

pub fn unit_features(u: &Unit, n_types: usize, max_speed: f64) -> Vec<f64> {
    let s = &u.spec.stats;
    let mut f = Vec::with_capacity(feature_dim(n_types));
    f.push(if u.team == Team::Theirs { 1.0 } else { 0.0 });
    f.push(u.pos[0] / ARENA);
    f.push(u.pos[1] / ARENA);
    f.push(u.velocity[0] / max_speed);
    f.push(u.velocity[1] / max_speed);
    f.push(u.health / s.max_health);
    f.push(s.range / ARENA);
    f.push(u.cooldown as f64 / s.cooldown_frames as f64);
    if n_types > 1 {
        f.extend((0..n_types).map(|t| if t == u.spec.type_id { 1.0 } else { 0.0 }));
    }
    f
}

/// Agent features, task features and the `(previous target, distance)` pair extras.
pub fn extract_battle_features(
    state: &BattleState,
    prev: &[Option<usize>],
    n_types: usize,
    max_speed: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Array3<f64>) {
    let agents = state.ours.iter().map(|u| unit_features(u, n_types, max_speed)).collect();
    let tasks = state.theirs.iter().map(|u| unit_features(u, n_types, max_speed)).collect();
    let extras = Array3::from_shape_fn((state.ours.len(), state.theirs.len(), PAIR_EXTRAS), |(i, j, k)| {
        if k == 0 {
            if prev.get(i).copied().flatten() == Some(j) {
                1.0
            } else {
                0.0
            }
        } else {
            dist(state.ours[i].pos, state.theirs[j].pos) / ARENA
        }
    });
    (agents, tasks, extras)
}

/// Capacities are enemy health, contributions our damage per attack (0 when dead).
pub fn build_battle_constraints(state: &BattleState) -> ConstraintSet {
    let u = Array1::from_iter(state.theirs.iter().map(|e| e.health));
    let mu = Array2::from_shape_fn((state.ours.len(), state.theirs.len()), |(i, _)| {
        let a = &state.ours[i];
        if a.alive() {
            a.spec.stats.damage_per_attack
        } else {
            0.0
        }
    });
    ConstraintSet::new(mu, u).expect("health and damage are nonnegative")
}

pub fn window_reward(our_before: f64, our_after: f64, their_before: f64, their_after: f64, our_initial: f64) -> f64 {
    (our_after - our_before + their_before - their_after) / our_initial
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitFrame {
    pub team: Team,
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub health: f64,
    pub cooldown: u32,
    pub target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u32,
    pub units: Vec<UnitFrame>,
}

pub fn write_replay(frames: &[FrameRecord], mut out: impl Write) -> std::io::Result<()> {
    for f in frames {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BattleEnv {
    cfg: BattleConfig,
    state: BattleState,
    prev: Vec<Option<usize>>,
    initial_health: f64,
    windows: usize,
    n_types: usize,
    max_speed: f64,
    replay: Option<Vec<FrameRecord>>,
}

impl BattleEnv {
    pub fn new(cfg: BattleConfig) -> Result<Self, EnvError> {
        cfg.validate().map_err(|e| EnvError::InvalidConfig(e.to_string()))?;
        let state = spawn_battle(&cfg);
        let n = state.ours.len();
        Ok(Self {
            initial_health: state.health(Team::Ours),
            n_types: cfg.scenario.types.len(),
            max_speed: cfg.scenario.max_speed(),
            cfg,
            state,
            prev: vec![None; n],
            windows: 0,
            replay: None,
        })
    }

    pub fn config(&self) -> &BattleConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BattleState {
        &self.state
    }

    pub fn initial_health(&self) -> f64 {
        self.initial_health
    }

    pub fn feature_dim(&self) -> usize {
        feature_dim(self.n_types)
    }

    pub fn outcome(&self) -> Outcome {
        self.state.outcome()
    }

    pub fn record_replay(&mut self) {
        self.replay = Some(vec![self.snapshot()]);
    }

    pub fn replay(&self) -> &[FrameRecord] {
        self.replay.as_deref().unwrap_or(&[])
    }

    fn snapshot(&self) -> FrameRecord {
        let units = self
            .state
            .ours
            .iter()
            .chain(&self.state.theirs)
            .map(|u| UnitFrame {
                team: u.team,
                id: u.id,
                x: u.pos[0],
                y: u.pos[1],
                health: u.health,
                cooldown: u.cooldown,
                target: u.target,
            })
            .collect();
        FrameRecord { frame: self.state.frame, units }
    }

    /// Runs `policy` until the battle ends.
    pub fn run(&mut self, mut policy: impl FnMut(&BattleState) -> Assignment) -> Result<(Outcome, f64), EnvError> {
        let mut ret = 0.0;
        while !self.is_done() {
            let a = policy(&self.state);
            ret += TaskEnv::step(self, &a)?.reward;
        }
        Ok((self.outcome(), ret))
    }
}

impl TaskEnv for BattleEnv {
    fn observe(&self) -> Observation {
        let (agent_feats, task_feats, extras) =
            extract_battle_features(&self.state, &self.prev, self.n_types, self.max_speed);
        let entities = self
            .state
            .ours
            .iter()
            .chain(&self.state.theirs)
            .map(|u| {
                let kind = if u.team == Team::Ours { 0 } else { 1 };
                Entity::new(kind, unit_features(u, self.n_types, self.max_speed))
            })
            .collect();
        Observation {
            agent_feats,
            task_feats,
            pair_extras: Some(extras),
            constraints: build_battle_constraints(&self.state),
            entities,
        }
    }

    fn step(&mut self, assignment: &Assignment) -> Result<Transition, EnvError> {
        let (n, m) = (self.state.ours.len(), self.state.theirs.len());
        if assignment.n() != n {
            return Err(EnvError::InvalidAssignment(format!("{} targets for {n} units", assignment.n())));
        }
        if let Some(j) = assignment.targets.iter().flatten().find(|&&j| j >= m) {
            return Err(EnvError::InvalidAssignment(format!("enemy {j} out of range (m = {m})")));
        }
        if self.is_done() {
            return Err(EnvError::Finished);
        }
        let (our_before, their_before) = (self.state.health(Team::Ours), self.state.health(Team::Theirs));
        for _ in 0..self.cfg.assignment_period {
            if self.state.eliminated() || self.state.frame >= self.cfg.frame_cap {
                break;
            }
            self.state.frame(&assignment.targets, &self.cfg);
            if self.replay.is_some() {
                let snap = self.snapshot();
                self.replay.as_mut().expect("checked").push(snap);
            }
        }
        self.prev = assignment.targets.clone();
        self.windows += 1;
        let reward = window_reward(
            our_before,
            self.state.health(Team::Ours),
            their_before,
            self.state.health(Team::Theirs),
            self.initial_health,
        );
        Ok(Transition { reward, done: self.is_done() })
    }

    fn is_done(&self) -> bool {
        self.state.eliminated() || self.state.frame >= self.cfg.frame_cap
    }

    fn hit_cap(&self) -> bool {
        !self.state.eliminated() && self.state.frame >= self.cfg.frame_cap
    }

    fn steps(&self) -> usize {
        self.windows
    }

    fn won(&self) -> Option<bool> {
        Some(self.outcome() == Outcome::Win)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{default_catalog, Scenario};

    fn env(name: &str, seed: u64) -> BattleEnv {
        let s = Scenario::from_name(name).unwrap().resolve(&default_catalog()).unwrap();
        BattleEnv::new(BattleConfig::new(s, seed)).unwrap()
    }

    #[test]
    fn reward_formula() {
        assert!((window_reward(100.0, 90.0, 100.0, 80.0, 100.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn idle_window_out_of_range_is_worth_nothing() {
        let mut e = env("w3v3", 2);
        let t = e.step(&Assignment::unassigned(3)).unwrap();
        assert_eq!(t.reward, 0.0);
        assert!(!t.done);
        assert_eq!(e.state().frame, 6);
    }

    #[test]
    fn feature_widths() {
        let e = env("m4v5", 0);
        let o = e.observe();
        assert_eq!(o.agent_feats[0].len(), 8);
        assert_eq!(o.task_feats.len(), 5);
        assert_eq!(o.pair_extras.as_ref().unwrap().dim(), (4, 5, 2));
        let z = env("zh2v2", 0);
        assert_eq!(z.observe().agent_feats[0].len(), 10);
    }

    #[test]
    fn previous_target_flag_and_stationary_velocity() {
        let mut e = env("m3v3", 0);
        let o = e.observe();
        assert!(o.agent_feats.iter().all(|f| f[3] == 0.0 && f[4] == 0.0));
        e.step(&Assignment { targets: vec![Some(2), None, Some(0)] }).unwrap();
        let ex = e.observe().pair_extras.unwrap();
        assert_eq!(ex[[0, 2, 0]], 1.0);
        assert_eq!(ex[[0, 1, 0]], 0.0);
        assert_eq!(ex[[1, 0, 0]], 0.0);
        assert_eq!(ex[[2, 0, 0]], 1.0);
    }

    #[test]
    fn constraints_follow_health_and_damage() {
        let mut e = env("m3v2", 0);
        let c = build_battle_constraints(e.state());
        assert_eq!(c.u().to_vec(), vec![40.0, 40.0]);
        assert!(c.mu().iter().all(|&v| v == 6.0));
        e.state.theirs[1].health = 0.0;
        e.state.ours[0].health = 0.0;
        let c = build_battle_constraints(e.state());
        assert_eq!(c.u()[1], 0.0);
        assert_eq!(c.mu().row(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_out_of_range_targets() {
        let mut e = env("m2v2", 0);
        assert!(e.step(&Assignment { targets: vec![Some(2), None] }).is_err());
    }
}
