use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use swarmplan_battle::{default_catalog, feature_dim, BattleConfig, BattleEnv, ResolvedScenario};
use swarmplan_core::env::TaskEnv;
use swarmplan_learner::EnvFactory;
use swarmplan_rescue::env::{AGENT_FEATURES, ENTITY_FEATURES, ENTITY_KINDS, TASK_FEATURES};
use swarmplan_rescue::{RescueConfig, RescueEnv};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Rescue,
    Battle,
}

impl EnvKind {
    /// Guesses the environment from a scenario string: `NxM` is a rescue grid.
    pub fn infer(spec: &str) -> Self {
        if parse_size(spec).is_some() {
            Self::Rescue
        } else {
            Self::Battle
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Rescue { n: usize, m: usize },
    Battle(ResolvedScenario),
}

fn parse_size(spec: &str) -> Option<(usize, usize)> {
    let (a, b) = spec.split_once(['x', 'X', '×'])?;
    let (n, m) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (n > 0 && m > 0).then_some((n, m))
}

impl Scenario {
    /// `2x4` for rescue; a name such as `m10v10` or a path to a JSON scenario for battle.
    pub fn parse(env: EnvKind, spec: &str) -> Result<Self> {
        match env {
            EnvKind::Rescue => {
                let (n, m) = parse_size(spec)
                    .ok_or_else(|| HarnessError::Config(format!("rescue size {spec:?} is not of the form NxM")))?;
                RescueConfig::new(n, m, 0).validate()?;
                Ok(Self::Rescue { n, m })
            }
            EnvKind::Battle => {
                let s = if spec.ends_with(".json") {
                    swarmplan_battle::Scenario::from_json(&std::fs::read_to_string(spec)?)?
                } else {
                    swarmplan_battle::Scenario::from_name(spec)?
                };
                Ok(Self::Battle(s.resolve(&default_catalog())?))
            }
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            Self::Rescue { .. } => EnvKind::Rescue,
            Self::Battle(_) => EnvKind::Battle,
        }
    }

    pub fn factory(&self) -> EnvFactory {
        match self.clone() {
            Self::Rescue { n, m } => {
                Arc::new(move |seed| Ok(Box::new(RescueEnv::new(RescueConfig::new(n, m, seed))?) as Box<dyn TaskEnv>))
            }
            Self::Battle(s) => Arc::new(move |seed| {
                Ok(Box::new(BattleEnv::new(BattleConfig::new(s.clone(), seed))?) as Box<dyn TaskEnv>)
            }),
        }
    }

    /// Agent, task and pair-extra feature widths of the scoring model.
    pub fn model_dims(&self) -> (usize, usize, usize) {
        match self {
            Self::Rescue { .. } => (AGENT_FEATURES, TASK_FEATURES, 0),
            Self::Battle(s) => {
                let f = feature_dim(s.types.len());
                (f, f, swarmplan_battle::env::PAIR_EXTRAS)
            }
        }
    }

    /// Entity kinds and entity feature width of the critic.
    pub fn critic_dims(&self) -> (usize, usize) {
        match self {
            Self::Rescue { .. } => (ENTITY_KINDS, ENTITY_FEATURES),
            Self::Battle(s) => (2, feature_dim(s.types.len())),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rescue { n, m } => write!(f, "{n}x{m}"),
            Self::Battle(s) => write!(f, "{}", s.name),
        }
    }
}
