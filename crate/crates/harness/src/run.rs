use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use swarmplan_core::scoring::{CriticParams, ScoringModel};
use swarmplan_learner::{EvalSpec, EvalSummary, MetricsRow, Trainer};

use crate::config::ExperimentConfig;
use crate::Result;

/// `git describe` of the source tree, or the crate version outside a checkout.
pub fn code_version() -> String {
    let dir = env!("CARGO_MANIFEST_DIR");
    Command::new("git")
        .args(["-C", dir, "describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("swarmplan-{}", env!("CARGO_PKG_VERSION")))
}

/// Directory holding everything needed to rerun and inspect one training run.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Creates `root/name`, adding a numeric suffix if it already exists.
    pub fn create(root: impl AsRef<Path>, name: &str) -> Result<Self> {
        let root = root.as_ref();
        fs::create_dir_all(root)?;
        let mut path = root.join(name);
        let mut k = 1;
        while path.exists() {
            path = root.join(format!("{name}-{k}"));
            k += 1;
        }
        fs::create_dir_all(path.join("checkpoints"))?;
        Ok(Self { path })
    }

    pub fn config_path(&self) -> PathBuf {
        self.path.join("config.json")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.path.join("metrics.csv")
    }

    pub fn policy_path(&self) -> PathBuf {
        self.path.join("checkpoints").join("final.ckpt")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub updates: u64,
    pub env_steps: u64,
    pub skipped_updates: u64,
    pub eval: EvalSummary,
}

/// Trains per `cfg` into a fresh run directory and evaluates the final policy
/// on the configured seeds.
pub fn train_experiment(cfg: &ExperimentConfig, run: &RunDir) -> Result<TrainOutcome> {
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let inference = cfg.inference()?;
    fs::write(run.config_path(), serde_json::to_string_pretty(cfg)?)?;
    fs::write(run.path.join("version.txt"), code_version() + "\n")?;

    let (a, t, e) = scenario.model_dims();
    let (kinds, feats) = scenario.critic_dims();
    let model = ScoringModel::new(a, t, e, cfg.a2c.seed);
    let critic = CriticParams::new(kinds, feats, cfg.a2c.seed.wrapping_add(1));
    let factory = scenario.factory();
    let mut trainer = Trainer::new(model, critic, inference, cfg.a2c.clone(), factory.clone())?;

    let seeds = cfg.eval_seeds.resolve();
    let eval = EvalSpec {
        factory: factory.clone(),
        seeds: seeds[..cfg.train_eval_episodes.clamp(1, seeds.len())].to_vec(),
        every_updates: cfg.eval_every,
    };
    let mut metrics = csv::Writer::from_path(run.metrics_path())?;
    trainer.train(cfg.budget, (cfg.eval_every > 0).then_some(&eval), |row: &MetricsRow| {
        log::info!("updates {} env steps {} eval {:?}", row.updates, row.env_steps, row.eval_mean_length_or_winrate);
        metrics.serialize(row)?;
        metrics.flush()?;
        Ok(())
    })?;
    drop(metrics);
    let checkpoint = run.policy_path();
    trainer.save_checkpoint(&checkpoint)?;

    let summary = trainer.evaluate(&factory, &seeds)?;
    let outcome = TrainOutcome {
        run_dir: run.path.clone(),
        checkpoint,
        updates: trainer.updates,
        env_steps: trainer.env_steps,
        skipped_updates: trainer.skipped,
        eval: summary,
    };
    fs::write(run.path.join("eval.json"), serde_json::to_string_pretty(&outcome)?)?;
    Ok(outcome)
}
