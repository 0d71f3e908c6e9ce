use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swarmplan_core::env::{Observation, TaskEnv};
use swarmplan_core::scoring::ScoringModel;
use swarmplan_core::{Assignment, Inference};

use crate::config::NoiseMode;
use crate::rollout::{Actor, EnvFactory};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub length: usize,
    pub total_reward: f64,
    pub hit_cap: bool,
    pub won: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: Vec<EpisodeResult>,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    xs.sum::<f64>() / n.max(1) as f64
}

impl EvalSummary {
    pub fn lengths(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.length as f64).collect()
    }

    pub fn mean_length(&self) -> f64 {
        mean(self.episodes.iter().map(|e| e.length as f64))
    }

    /// Standard error of the mean episode length.
    pub fn stderr_length(&self) -> f64 {
        let n = self.episodes.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_length();
        let var = self.episodes.iter().map(|e| (e.length as f64 - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    pub fn mean_return(&self) -> f64 {
        mean(self.episodes.iter().map(|e| e.total_reward))
    }

    /// Episodes that ran into the step or frame cap.
    pub fn failures(&self) -> usize {
        self.episodes.iter().filter(|e| e.hit_cap).count()
    }

    pub fn win_rate(&self) -> Option<f64> {
        let wins: Vec<bool> = self.episodes.iter().filter_map(|e| e.won).collect();
        (!wins.is_empty()).then(|| wins.iter().filter(|&&w| w).count() as f64 / wins.len() as f64)
    }

    /// Win rate where the environment defines one, mean length otherwise.
    pub fn headline(&self) -> f64 {
        self.win_rate().unwrap_or_else(|| self.mean_length())
    }
}

/// Plays one episode to the end with `policy`.
pub fn run_episode(
    env: &mut dyn TaskEnv,
    seed: u64,
    mut policy: impl FnMut(&Observation) -> Result<Assignment>,
) -> Result<EpisodeResult> {
    let mut total = 0.0;
    while !env.is_done() {
        let a = policy(&env.observe())?;
        total += env.step(&a)?.reward;
    }
    Ok(EpisodeResult { seed, length: env.steps(), total_reward: total, hit_cap: env.hit_cap(), won: env.won() })
}

/// Exploration used while evaluating: `sigma = 0` evaluates greedily.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalNoise {
    pub sigma: f64,
    pub p: usize,
    pub mode: NoiseMode,
}

impl EvalNoise {
    pub const OFF: EvalNoise = EvalNoise { sigma: 0.0, p: 1, mode: NoiseMode::Innovation };
}

/// Runs one episode per seed, in parallel on the current rayon pool. The
/// exploration stream of each episode is derived from its seed, so results do
/// not depend on scheduling.
pub fn evaluate(
    model: &ScoringModel,
    inference: &Inference,
    factory: &EnvFactory,
    seeds: &[u64],
    noise: EvalNoise,
) -> Result<EvalSummary> {
    let episodes = seeds
        .par_iter()
        .map(|&seed| {
            let mut env = factory(seed)?;
            let mut actor = Actor::new(inference.clone(), noise.sigma, noise.p, noise.mode, seed ^ 0x5eed_0f_e7a1);
            run_episode(env.as_mut(), seed, |obs| Ok(actor.act(model, obs)?.assignment))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalSummary { episodes })
}
