#![allow(dead_code)]

use std::sync::Arc;

use ndarray::{Array1, Array2};
use swarmplan_core::env::{EnvError, Observation, TaskEnv, Transition};
use swarmplan_core::scoring::Entity;
use swarmplan_core::{Assignment, ConstraintSet};
use swarmplan_learner::EnvFactory;
use swarmplan_rescue::env::{RescueConfig, RescueEnv};

pub fn rescue_factory(n: usize, m: usize) -> EnvFactory {
    Arc::new(move |seed| Ok(Box::new(RescueEnv::new(RescueConfig::new(n, m, seed))?) as Box<dyn TaskEnv>))
}

/// Fixed-length episodes with a reward of 1 per step.
pub struct Countdown {
    pub t: usize,
    pub len: usize,
}

impl TaskEnv for Countdown {
    fn observe(&self) -> Observation {
        let x = self.t as f64 / self.len as f64;
        Observation {
            agent_feats: vec![vec![x, 1.0]],
            task_feats: vec![vec![1.0 - x, 0.0, 0.5]],
            pair_extras: None,
            constraints: ConstraintSet::new(Array2::ones((1, 1)), Array1::ones(1)).unwrap(),
            entities: vec![Entity::new(0, vec![x, 0.0, 0.0])],
        }
    }

    fn step(&mut self, _: &Assignment) -> Result<Transition, EnvError> {
        if self.t >= self.len {
            return Err(EnvError::Finished);
        }
        self.t += 1;
        Ok(Transition { reward: 1.0, done: self.t == self.len })
    }

    fn is_done(&self) -> bool {
        self.t >= self.len
    }

    fn hit_cap(&self) -> bool {
        false
    }

    fn steps(&self) -> usize {
        self.t
    }
}

pub fn countdown_factory(len: usize) -> EnvFactory {
    Arc::new(move |_| Ok(Box::new(Countdown { t: 0, len }) as Box<dyn TaskEnv>))
}
