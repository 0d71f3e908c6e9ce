use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swarmplan_core::scoring::{Checkpoint, CriticParams, ScoringModel};
use swarmplan_core::Inference;

use crate::config::A2CConfig;
use crate::eval::{evaluate, EvalNoise, EvalSummary};
use crate::rollout::{Actor, Chunk, EnvFactory, EpisodeStats, Worker, TRAIN_SEED_BASE};
use crate::update::{Diagnostics, Updater};
use crate::{LearnerError, Result};

pub const METRICS_HEADER: [&str; 8] = [
    "wall_clock",
    "env_steps",
    "updates",
    "eval_mean_return",
    "eval_mean_length_or_winrate",
    "value_loss",
    "policy_loss",
    "mean_ir",
];

/// Rayon pool sized by `SWARMPLAN_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SWARMPLAN_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| LearnerError::Config(format!("SWARMPLAN_THREADS={v:?} is not a positive integer")))?;
        b = b.num_threads(k);
    }
    b.build().map_err(|e| LearnerError::Config(e.to_string()))
}

/// Stops training at whichever limit comes first. All `None` means no training at all.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub updates: Option<u64>,
    pub env_steps: Option<u64>,
    pub seconds: Option<f64>,
}

impl Budget {
    pub fn updates(k: u64) -> Self {
        Self { updates: Some(k), ..Self::default() }
    }

    pub fn seconds(s: f64) -> Self {
        Self { seconds: Some(s), ..Self::default() }
    }

    fn exhausted(&self, updates: u64, env_steps: u64, elapsed: f64) -> bool {
        let unset = self.updates.is_none() && self.env_steps.is_none() && self.seconds.is_none();
        unset
            || self.updates.is_some_and(|k| updates >= k)
            || self.env_steps.is_some_and(|k| env_steps >= k)
            || self.seconds.is_some_and(|s| elapsed >= s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub wall_clock: f64,
    pub env_steps: u64,
    pub updates: u64,
    pub eval_mean_return: Option<f64>,
    pub eval_mean_length_or_winrate: Option<f64>,
    pub value_loss: f64,
    pub policy_loss: f64,
    pub mean_ir: f64,
}

/// Held-out evaluation run periodically during training.
#[derive(Clone)]
pub struct EvalSpec {
    pub factory: EnvFactory,
    pub seeds: Vec<u64>,
    pub every_updates: u64,
}

pub struct Trainer {
    pub model: ScoringModel,
    pub critic: CriticParams,
    pub inference: Inference,
    pub cfg: A2CConfig,
    pub updater: Updater,
    workers: Vec<Worker>,
    pool: rayon::ThreadPool,
    pub env_steps: u64,
    pub updates: u64,
    pub skipped: u64,
    pub episodes: Vec<EpisodeStats>,
    elapsed: f64,
}

impl Trainer {
    pub fn new(
        model: ScoringModel,
        critic: CriticParams,
        inference: Inference,
        cfg: A2CConfig,
        factory: EnvFactory,
    ) -> Result<Self> {
        cfg.validate()?;
        let base = TRAIN_SEED_BASE + cfg.seed * (1 << 24);
        let workers = (0..cfg.workers)
            .map(|w| {
                let actor = Actor::from_config(inference.clone(), &cfg, cfg.seed.wrapping_mul(1000).wrapping_add(w as u64));
                Worker::new(factory.clone(), actor, w, cfg.workers, base)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            updater: Updater::new(&model, &critic, &cfg),
            model,
            critic,
            inference,
            cfg,
            workers,
            pool: thread_pool()?,
            env_steps: 0,
            updates: 0,
            skipped: 0,
            episodes: Vec::new(),
            elapsed: 0.0,
        })
    }

    pub fn pool(&self) -> &rayon::ThreadPool {
        &self.pool
    }

    /// One synchronous round: every worker rolls out against the current
    /// parameters, then a single update is applied.
    pub fn step(&mut self) -> Result<Diagnostics> {
        let per_worker = self.cfg.chunks_per_update.div_ceil(self.cfg.workers);
        let (model, n) = (&self.model, self.cfg.n_steps);
        let batches: Vec<Result<Vec<Chunk>>> = self.pool.install(|| {
            self.workers
                .par_iter_mut()
                .map(|w| (0..per_worker).map(|_| w.rollout(model, n)).collect())
                .collect()
        });
        let mut chunks = Vec::with_capacity(per_worker * self.workers.len());
        for b in batches {
            chunks.extend(b?.into_iter().filter(|c| !c.steps.is_empty()));
        }
        for w in &mut self.workers {
            self.episodes.append(&mut w.finished);
        }
        self.env_steps += chunks.iter().map(|c| c.steps.len() as u64).sum::<u64>();
        let diag = self.updater.update(&mut self.model, &mut self.critic, &chunks, &self.cfg)?;
        self.updates += 1;
        self.skipped += u64::from(diag.skipped);
        Ok(diag)
    }

    pub fn evaluate(&self, factory: &EnvFactory, seeds: &[u64]) -> Result<EvalSummary> {
        let noise = EvalNoise { sigma: self.cfg.sigma, p: self.cfg.p, mode: self.cfg.noise_mode };
        let (model, inference) = (&self.model, &self.inference);
        self.pool.install(|| evaluate(model, inference, factory, seeds, noise))
    }

    /// Trains until `budget` runs out, reporting a metrics row after every
    /// evaluation and once at the end.
    pub fn train(
        &mut self,
        budget: Budget,
        eval: Option<&EvalSpec>,
        mut on_metrics: impl FnMut(&MetricsRow) -> Result<()>,
    ) -> Result<Vec<MetricsRow>> {
        let start = Instant::now();
        let base_elapsed = self.elapsed;
        let mut rows = Vec::new();
        let mut last = Diagnostics::default();
        let mut emit = |t: &Self, last: &Diagnostics, rows: &mut Vec<MetricsRow>, evaluated: bool| -> Result<()> {
            let summary = match (evaluated, eval) {
                (true, Some(e)) => Some(t.evaluate(&e.factory, &e.seeds)?),
                _ => None,
            };
            let row = MetricsRow {
                wall_clock: base_elapsed + start.elapsed().as_secs_f64(),
                env_steps: t.env_steps,
                updates: t.updates,
                eval_mean_return: summary.as_ref().map(EvalSummary::mean_return),
                eval_mean_length_or_winrate: summary.as_ref().map(EvalSummary::headline),
                value_loss: last.value_loss,
                policy_loss: last.policy_loss,
                mean_ir: last.mean_ir,
            };
            on_metrics(&row)?;
            rows.push(row);
            Ok(())
        };
        while !budget.exhausted(self.updates, self.env_steps, start.elapsed().as_secs_f64()) {
            last = self.step()?;
            if let Some(e) = eval {
                if e.every_updates > 0 && self.updates % e.every_updates == 0 {
                    emit(self, &last, &mut rows, true)?;
                }
            }
        }
        if rows.last().is_none_or(|r| r.updates != self.updates) {
            emit(self, &last, &mut rows, eval.is_some())?;
        }
        self.elapsed = base_elapsed + start.elapsed().as_secs_f64();
        Ok(rows)
    }

    /// Scoring model, critic and the exploration settings the policy was trained with.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        self.model.write_checkpoint(&mut ck);
        self.critic.write_checkpoint(&mut ck);
        ck.set_meta("inference", self.inference.name().into());
        ck.set_meta("sigma", self.cfg.sigma.into());
        ck.set_meta("p", self.cfg.p.into());
        ck.set_meta("noise_mode", serde_json::to_value(self.cfg.noise_mode).expect("serializable"));
        ck.set_meta("updates", self.updates.into());
        ck.set_meta("env_steps", self.env_steps.into());
        ck
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.checkpoint().save(path)?)
    }
}

pub fn write_metrics_csv(rows: &[MetricsRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
