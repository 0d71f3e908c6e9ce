use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmplan_core::env::{EnvError, Observation, TaskEnv};
use swarmplan_core::scoring::{PairInputs, ScoringModel};
use swarmplan_core::{Assignment, Inference, ScoreTable};

use crate::config::{A2CConfig, NoiseMode};
use crate::noise::NoiseWindow;
use crate::Result;

/// Builds a fresh environment for an episode seed.
pub type EnvFactory = Arc<dyn Fn(u64) -> Result<Box<dyn TaskEnv>, EnvError> + Send + Sync>;

/// First seed of the training range; evaluation seeds live far below it.
pub const TRAIN_SEED_BASE: u64 = 1 << 40;

/// Scores, perturbed scores and the resulting assignment for one step.
#[derive(Debug, Clone)]
pub struct Decision {
    pub h_mean: Array2<f64>,
    pub g_mean: Option<Array2<f64>>,
    pub h_action: Array2<f64>,
    pub g_action: Option<Array2<f64>>,
    pub assignment: Assignment,
}

/// Scoring model plus inference procedure, with its own exploration state.
#[derive(Debug, Clone)]
pub struct Actor {
    pub inference: Inference,
    /// Exploration variance; 0 turns exploration off.
    pub sigma: f64,
    h_noise: NoiseWindow,
    g_noise: NoiseWindow,
    rng: ChaCha8Rng,
}

impl Actor {
    pub fn new(inference: Inference, sigma: f64, p: usize, mode: NoiseMode, seed: u64) -> Self {
        Self {
            inference,
            sigma,
            h_noise: NoiseWindow::new(p, mode),
            g_noise: NoiseWindow::new(p, mode),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_config(inference: Inference, cfg: &A2CConfig, seed: u64) -> Self {
        Self::new(inference, cfg.sigma, cfg.p, cfg.noise_mode, seed)
    }

    /// Clears the noise history; call at the start of every episode.
    pub fn reset(&mut self) {
        self.h_noise.reset();
        self.g_noise.reset();
    }

    pub fn act(&mut self, model: &ScoringModel, obs: &Observation) -> Result<Decision> {
        let x = PairInputs { agents: &obs.agent_feats, tasks: &obs.task_feats, extras: obs.pair_extras.as_ref() };
        let scores = model.score_pairs(&x, self.inference.uses_g())?;
        let h_mean = scores.h().clone();
        let g_mean = scores.g().cloned();
        let h_action = self.h_noise.sample(&h_mean, self.sigma, &mut self.rng);
        let g_action = g_mean.as_ref().map(|g| self.g_noise.sample(g, self.sigma, &mut self.rng));
        let table = ScoreTable::new(h_action.clone(), g_action.clone())?;
        let assignment = self.inference.infer(&table, &obs.constraints)?;
        Ok(Decision { h_mean, g_mean, h_action, g_action, assignment })
    }
}

/// One recorded step: what was seen, the policy means, the sampled actions and the outcome.
#[derive(Debug, Clone)]
pub struct StepSample {
    pub obs: Observation,
    pub h_mean: Array2<f64>,
    pub g_mean: Option<Array2<f64>>,
    pub h_action: Array2<f64>,
    pub g_action: Option<Array2<f64>>,
    pub assignment: Assignment,
    pub reward: f64,
    /// The episode ended with this step (not by hitting the cap).
    pub terminal: bool,
}

/// At most `n_steps` consecutive steps of one episode.
#[derive(Debug, Clone)]
pub struct Chunk {
    pub steps: Vec<StepSample>,
    /// State after the last step when the episode goes on (or was cut by the cap).
    pub bootstrap: Option<Observation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub length: usize,
    pub total_reward: f64,
    pub hit_cap: bool,
}

/// A rollout worker: one environment, one actor, its own seed stream.
pub struct Worker {
    factory: EnvFactory,
    env: Box<dyn TaskEnv>,
    actor: Actor,
    index: u64,
    stride: u64,
    episode: u64,
    base: u64,
    episode_reward: f64,
    pub finished: Vec<EpisodeStats>,
    pub faults: usize,
}

impl Worker {
    pub fn new(factory: EnvFactory, actor: Actor, index: usize, stride: usize, base: u64) -> Result<Self> {
        let (index, stride) = (index as u64, stride.max(1) as u64);
        let env = factory(base + index)?;
        Ok(Self {
            factory,
            env,
            actor,
            index,
            stride,
            episode: 0,
            base,
            episode_reward: 0.0,
            finished: Vec::new(),
            faults: 0,
        })
    }

    fn next_episode(&mut self) -> Result<()> {
        self.episode += 1;
        self.env = (self.factory)(self.base + self.index + self.episode * self.stride)?;
        self.actor.reset();
        self.episode_reward = 0.0;
        Ok(())
    }

    /// Collects up to `n_steps` steps with a fixed parameter snapshot.
    pub fn rollout(&mut self, model: &ScoringModel, n_steps: usize) -> Result<Chunk> {
        let mut steps = Vec::with_capacity(n_steps);
        while steps.len() < n_steps {
            let obs = self.env.observe();
            let d = match self.actor.act(model, &obs) {
                Ok(d) => d,
                Err(e) => {
                    log::warn!("worker {}: inference failed, abandoning episode: {e}", self.index);
                    self.faults += 1;
                    self.next_episode()?;
                    return Ok(Chunk { steps, bootstrap: None });
                }
            };
            let tr = self.env.step(&d.assignment)?;
            self.episode_reward += tr.reward;
            let ended = self.env.is_done();
            let capped = ended && self.env.hit_cap();
            steps.push(StepSample {
                obs,
                h_mean: d.h_mean,
                g_mean: d.g_mean,
                h_action: d.h_action,
                g_action: d.g_action,
                assignment: d.assignment,
                reward: tr.reward,
                terminal: ended && !capped,
            });
            if ended {
                let bootstrap = capped.then(|| self.env.observe());
                self.finished.push(EpisodeStats {
                    length: self.env.steps(),
                    total_reward: self.episode_reward,
                    hit_cap: capped,
                });
                self.next_episode()?;
                return Ok(Chunk { steps, bootstrap });
            }
        }
        Ok(Chunk { steps, bootstrap: Some(self.env.observe()) })
    }
}
