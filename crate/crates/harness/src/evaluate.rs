use rayon::prelude::*;
use swarmplan_battle::{BattleConfig, BattleEnv, Heuristic, HeuristicKind};
use swarmplan_core::env::TaskEnv;
use swarmplan_core::scoring::{Checkpoint, ScoringModel};
use swarmplan_core::Inference;
use swarmplan_learner::{evaluate, EpisodeResult, EvalNoise, EvalSummary, NoiseMode};
use swarmplan_rescue::{closest_baseline, mvr_exact, RescueConfig, RescueEnv};

use crate::scenario::Scenario;
use crate::{HarnessError, Result};

/// First evaluation seed. Training seeds start far above this range.
pub const EVAL_SEED_BASE: u64 = 1_000_000;

pub fn standard_eval_seeds(count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| EVAL_SEED_BASE + k).collect()
}

/// A scoring model with the inference procedure and exploration it is evaluated with.
#[derive(Debug, Clone)]
pub struct LearnedPolicy {
    pub model: ScoringModel,
    pub inference: Inference,
    pub noise: EvalNoise,
}

impl LearnedPolicy {
    /// Reads the model and its training exploration settings. `inference`
    /// overrides the procedure stored in the checkpoint.
    pub fn from_checkpoint(ck: &Checkpoint, inference: Option<Inference>) -> Result<Self> {
        let model = ScoringModel::from_checkpoint(ck)?;
        let stored = ck.meta.get("inference").and_then(|v| v.as_str()).and_then(Inference::parse);
        let inference = inference
            .or(stored)
            .ok_or_else(|| HarnessError::Config("checkpoint names no inference procedure; pass one".into()))?;
        let sigma = ck.meta.get("sigma").and_then(|v| v.as_f64()).unwrap_or(0.0);
        let p = ck.meta.get("p").and_then(|v| v.as_u64()).unwrap_or(1) as usize;
        let mode = ck
            .meta
            .get("noise_mode")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .unwrap_or(NoiseMode::Innovation);
        Ok(Self { model, inference, noise: EvalNoise { sigma, p, mode } })
    }

    pub fn check_fits(&self, scenario: &Scenario) -> Result<()> {
        let want = scenario.model_dims();
        let got = (self.model.agent_dim, self.model.task_dim, self.model.extra_dim);
        if want != got {
            return Err(HarnessError::Mismatch(format!(
                "model takes (agent, task, extra) = {got:?} features, scenario {scenario} provides {want:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Policy {
    Learned(LearnedPolicy),
    /// Every ambulance heads for its closest waiting victim.
    RescueBaseline,
    /// Exact minimum-makespan routes.
    RescueTopline,
    Heuristic(HeuristicKind),
}

impl Policy {
    pub fn name(&self) -> String {
        match self {
            Self::Learned(p) => format!("{}-dm", p.inference.name()),
            Self::RescueBaseline => "baseline".into(),
            Self::RescueTopline => "topline".into(),
            Self::Heuristic(k) => k.name().into(),
        }
    }
}

fn rescue_episode(n: usize, m: usize, seed: u64, topline: bool) -> Result<EpisodeResult> {
    let mut env = RescueEnv::new(RescueConfig::new(n, m, seed))?;
    let length = if topline {
        let plan = mvr_exact(env.state())?;
        env.run(|s| plan.assignment(s))?
    } else {
        env.run(closest_baseline)?
    };
    Ok(EpisodeResult {
        seed,
        length,
        total_reward: swarmplan_rescue::env::STEP_REWARD * length as f64,
        hit_cap: env.hit_cap(),
        won: None,
    })
}

fn battle_episode(scenario: &swarmplan_battle::ResolvedScenario, kind: HeuristicKind, seed: u64) -> Result<EpisodeResult> {
    let mut env = BattleEnv::new(BattleConfig::new(scenario.clone(), seed))?;
    let mut h = Heuristic::new(kind, seed);
    let (_, total) = env.run(|s| h.act(s))?;
    Ok(EpisodeResult { seed, length: env.steps(), total_reward: total, hit_cap: env.hit_cap(), won: env.won() })
}

/// One episode per seed, in parallel on the current rayon pool. Deterministic
/// for a given policy and seed list.
pub fn evaluate_policy(policy: &Policy, scenario: &Scenario, seeds: &[u64]) -> Result<EvalSummary> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("empty evaluation seed list".into()));
    }
    let episodes = match (policy, scenario) {
        (Policy::Learned(p), s) => {
            p.check_fits(s)?;
            return Ok(evaluate(&p.model, &p.inference, &s.factory(), seeds, p.noise)?);
        }
        (Policy::RescueBaseline | Policy::RescueTopline, Scenario::Rescue { n, m }) => {
            let topline = matches!(policy, Policy::RescueTopline);
            seeds.par_iter().map(|&s| rescue_episode(*n, *m, s, topline)).collect::<Result<Vec<_>>>()?
        }
        (Policy::Heuristic(k), Scenario::Battle(b)) => {
            seeds.par_iter().map(|&s| battle_episode(b, *k, s)).collect::<Result<Vec<_>>>()?
        }
        _ => {
            return Err(HarnessError::Config(format!("policy {} does not apply to scenario {scenario}", policy.name())))
        }
    };
    Ok(EvalSummary { episodes })
}

/// Headline numbers of one evaluation, as printed by the CLI.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Report {
    pub policy: String,
    pub scenario: String,
    pub episodes: usize,
    pub mean_length: f64,
    pub stderr_length: f64,
    pub mean_return: f64,
    pub failures: usize,
    pub win_rate: Option<f64>,
}

impl Report {
    pub fn new(policy: &Policy, scenario: &Scenario, s: &EvalSummary) -> Self {
        Self {
            policy: policy.name(),
            scenario: scenario.to_string(),
            episodes: s.episodes.len(),
            mean_length: s.mean_length(),
            stderr_length: s.stderr_length(),
            mean_return: s.mean_return(),
            failures: s.failures(),
            win_rate: s.win_rate(),
        }
    }
}
