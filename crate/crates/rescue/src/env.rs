use std::io::Write;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use swarmplan_core::env::{EnvError, Observation, TaskEnv, Transition};
use swarmplan_core::scoring::Entity;
use swarmplan_core::{Assignment, ConstraintSet};

use crate::grid::{low_level_move, Cell, GRID};

pub const STEP_REWARD: f64 = -0.01;
pub const DEFAULT_MAX_STEPS: usize = 400;
pub const AGENT_FEATURES: usize = 2;
pub const TASK_FEATURES: usize = 3;
/// Critic view: ambulances are kind 0, victims kind 1.
pub const ENTITY_KINDS: usize = 2;
pub const ENTITY_FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RescueConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub max_steps: usize,
}

impl RescueConfig {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self { n, m, seed, max_steps: DEFAULT_MAX_STEPS }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.n == 0 || self.m == 0 {
            return Err(EnvError::InvalidConfig("need at least one ambulance and one victim".into()));
        }
        if self.n > (GRID * GRID) as usize {
            return Err(EnvError::InvalidConfig(format!("{} ambulances do not fit on the grid", self.n)));
        }
        if self.max_steps == 0 {
            return Err(EnvError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Victim {
    pub cell: Cell,
    pub picked_up: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridState {
    pub ambulances: Vec<Cell>,
    pub victims: Vec<Victim>,
    pub step_count: usize,
}

impl GridState {
    pub fn remaining(&self) -> usize {
        self.victims.iter().filter(|v| !v.picked_up).count()
    }

    pub fn all_picked(&self) -> bool {
        self.victims.iter().all(|v| v.picked_up)
    }
}

/// Ambulances first, then victims; each cell draws x then y uniformly.
pub fn spawn(cfg: &RescueConfig) -> GridState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cell = || Cell::new(rng.random_range(0..GRID), rng.random_range(0..GRID));
    let ambulances = (0..cfg.n).map(|_| cell()).collect();
    let victims = (0..cfg.m).map(|_| Victim { cell: cell(), picked_up: false }).collect();
    GridState { ambulances, victims, step_count: 0 }
}

pub fn build_constraints(state: &GridState) -> ConstraintSet {
    let (n, m) = (state.ambulances.len(), state.victims.len());
    let u = Array1::from_iter(state.victims.iter().map(|v| if v.picked_up { 0.0 } else { 1.0 }));
    ConstraintSet::new(Array2::ones((n, m)), u).expect("unit constraints are valid")
}

fn norm(c: i32) -> f64 {
    c as f64 / (GRID - 1) as f64
}

/// Agent features `(x, y)` and task features `(x, y, picked_up)`, coordinates scaled to `[0, 1]`.
pub fn extract_features(state: &GridState) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let agents = state.ambulances.iter().map(|a| vec![norm(a.x), norm(a.y)]).collect();
    let tasks = state
        .victims
        .iter()
        .map(|v| vec![norm(v.cell.x), norm(v.cell.y), if v.picked_up { 1.0 } else { 0.0 }])
        .collect();
    (agents, tasks)
}

pub fn entities(state: &GridState) -> Vec<Entity> {
    let mut out: Vec<Entity> = state
        .ambulances
        .iter()
        .map(|a| Entity::new(0, vec![norm(a.x), norm(a.y), 0.0]))
        .collect();
    out.extend(state.victims.iter().map(|v| {
        Entity::new(1, vec![norm(v.cell.x), norm(v.cell.y), if v.picked_up { 1.0 } else { 0.0 }])
    }));
    out
}

/// Moves every assigned ambulance one cell toward its victim, then picks up
/// every victim that shares a cell with any ambulance.
pub fn step(state: &mut GridState, assignment: &Assignment, max_steps: usize) -> Result<Transition, EnvError> {
    let m = state.victims.len();
    if assignment.n() != state.ambulances.len() {
        return Err(EnvError::InvalidAssignment(format!(
            "{} targets for {} ambulances",
            assignment.n(),
            state.ambulances.len()
        )));
    }
    if let Some(j) = assignment.targets.iter().flatten().find(|&&j| j >= m) {
        return Err(EnvError::InvalidAssignment(format!("victim {j} out of range (m = {m})")));
    }
    if state.all_picked() || state.step_count >= max_steps {
        return Err(EnvError::Finished);
    }
    for (a, t) in state.ambulances.iter_mut().zip(&assignment.targets) {
        if let Some(j) = *t {
            *a = a.offset(low_level_move(*a, state.victims[j].cell));
        }
    }
    for v in state.victims.iter_mut().filter(|v| !v.picked_up) {
        if state.ambulances.contains(&v.cell) {
            v.picked_up = true;
        }
    }
    state.step_count += 1;
    let done = state.all_picked() || state.step_count >= max_steps;
    Ok(Transition { reward: STEP_REWARD, done })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub ambulances: Vec<Cell>,
    pub victims: Vec<Victim>,
    pub assignment: Vec<Option<usize>>,
    pub reward: f64,
    pub done: bool,
}

pub fn write_trace(records: &[StepRecord], mut out: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RescueEnv {
    cfg: RescueConfig,
    state: GridState,
    trace: Option<Vec<StepRecord>>,
}

impl RescueEnv {
    pub fn new(cfg: RescueConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        Ok(Self { state: spawn(&cfg), cfg, trace: None })
    }

    pub fn from_state(state: GridState, max_steps: usize) -> Self {
        let cfg = RescueConfig { n: state.ambulances.len(), m: state.victims.len(), seed: 0, max_steps };
        Self { cfg, state, trace: None }
    }

    pub fn config(&self) -> &RescueConfig {
        &self.cfg
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    /// Records every subsequent step; the records are the JSON-lines trace.
    pub fn record_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> &[StepRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Runs `policy` until the episode ends and returns the episode length.
    pub fn run(&mut self, mut policy: impl FnMut(&GridState) -> Assignment) -> Result<usize, EnvError> {
        while !self.is_done() {
            let a = policy(&self.state);
            TaskEnv::step(self, &a)?;
        }
        Ok(self.state.step_count)
    }
}

impl TaskEnv for RescueEnv {
    fn observe(&self) -> Observation {
        let (agent_feats, task_feats) = extract_features(&self.state);
        Observation {
            agent_feats,
            task_feats,
            pair_extras: None,
            constraints: build_constraints(&self.state),
            entities: entities(&self.state),
        }
    }

    fn step(&mut self, assignment: &Assignment) -> Result<Transition, EnvError> {
        let t = step(&mut self.state, assignment, self.cfg.max_steps)?;
        if let Some(trace) = &mut self.trace {
            trace.push(StepRecord {
                step: self.state.step_count,
                ambulances: self.state.ambulances.clone(),
                victims: self.state.victims.clone(),
                assignment: assignment.targets.clone(),
                reward: t.reward,
                done: t.done,
            });
        }
        Ok(t)
    }

    fn is_done(&self) -> bool {
        self.state.all_picked() || self.state.step_count >= self.cfg.max_steps
    }

    fn hit_cap(&self) -> bool {
        !self.state.all_picked() && self.state.step_count >= self.cfg.max_steps
    }

    fn steps(&self) -> usize {
        self.state.step_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(amb: &[(i32, i32)], vic: &[(i32, i32)]) -> GridState {
        GridState {
            ambulances: amb.iter().map(|&(x, y)| Cell::new(x, y)).collect(),
            victims: vic.iter().map(|&(x, y)| Victim { cell: Cell::new(x, y), picked_up: false }).collect(),
            step_count: 0,
        }
    }

    #[test]
    fn spawn_is_reproducible_and_sized() {
        let cfg = RescueConfig::new(2, 4, 9);
        let s = spawn(&cfg);
        assert_eq!(s, spawn(&cfg));
        assert_eq!((s.ambulances.len(), s.victims.len()), (2, 4));
        assert!(s.victims.iter().all(|v| !v.picked_up));
        assert_ne!(s, spawn(&RescueConfig::new(2, 4, 10)));
    }

    #[test]
    fn adjacent_victim_is_picked_up() {
        let mut s = state(&[(0, 1)], &[(0, 2)]);
        let t = step(&mut s, &Assignment { targets: vec![Some(0)] }, 400).unwrap();
        assert_eq!(s.ambulances[0], Cell::new(0, 2));
        assert!(s.victims[0].picked_up);
        assert_eq!(t, Transition { reward: -0.01, done: true });
    }

    #[test]
    fn passing_over_a_victim_picks_it_up() {
        let mut s = state(&[(0, 0)], &[(1, 1), (3, 3)]);
        step(&mut s, &Assignment { targets: vec![Some(1)] }, 400).unwrap();
        assert!(s.victims[0].picked_up);
        assert!(!s.victims[1].picked_up);
    }

    #[test]
    fn unassigned_ambulance_stays() {
        let mut s = state(&[(5, 5), (0, 0)], &[(9, 9)]);
        step(&mut s, &Assignment { targets: vec![None, Some(0)] }, 400).unwrap();
        assert_eq!(s.ambulances[0], Cell::new(5, 5));
    }

    #[test]
    fn optimal_line_episode_takes_five_steps() {
        let mut env = RescueEnv::from_state(state(&[(0, 0)], &[(0, 3), (0, 5)]), 400);
        let mut ret = 0.0;
        while !env.is_done() {
            let target = if env.state().victims[0].picked_up { 1 } else { 0 };
            ret += TaskEnv::step(&mut env, &Assignment { targets: vec![Some(target)] }).unwrap().reward;
        }
        assert_eq!(env.steps(), 5);
        assert!((ret + 0.05).abs() < 1e-12);
    }

    #[test]
    fn constraints_close_picked_victims() {
        let mut s = state(&[(0, 0), (1, 1)], &[(2, 2), (3, 3), (4, 4), (5, 5)]);
        assert_eq!(build_constraints(&s).u().to_vec(), vec![1.0; 4]);
        s.victims[1].picked_up = true;
        assert_eq!(build_constraints(&s).u().to_vec(), vec![1.0, 0.0, 1.0, 1.0]);
        for v in &mut s.victims {
            v.picked_up = true;
        }
        assert_eq!(build_constraints(&s).u().to_vec(), vec![0.0; 4]);
    }

    #[test]
    fn features_are_scaled() {
        let mut s = state(&[(15, 0)], &[(3, 3)]);
        s.victims[0].picked_up = true;
        let (a, t) = extract_features(&s);
        assert_eq!(a[0], vec![1.0, 0.0]);
        assert_eq!(t[0], vec![0.2, 0.2, 1.0]);
    }

    #[test]
    fn rejects_bad_targets_and_finished_episodes() {
        let mut s = state(&[(0, 0)], &[(0, 1)]);
        assert!(matches!(
            step(&mut s, &Assignment { targets: vec![Some(1)] }, 400),
            Err(EnvError::InvalidAssignment(_))
        ));
        step(&mut s, &Assignment { targets: vec![Some(0)] }, 400).unwrap();
        assert_eq!(step(&mut s, &Assignment { targets: vec![Some(0)] }, 400), Err(EnvError::Finished));
    }

    #[test]
    fn cap_is_flagged() {
        let mut env = RescueEnv::from_state(state(&[(0, 0)], &[(9, 9)]), 3);
        let len = env.run(|_| Assignment { targets: vec![None] }).unwrap();
        assert_eq!(len, 3);
        assert!(env.hit_cap());
    }

    #[test]
    fn trace_serializes_one_line_per_step() {
        let mut env = RescueEnv::from_state(state(&[(0, 0)], &[(0, 2)]), 400);
        env.record_trace();
        env.run(|_| Assignment { targets: vec![Some(0)] }).unwrap();
        let mut buf = Vec::new();
        write_trace(env.trace(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let last: StepRecord = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert!(last.done);
    }
}
