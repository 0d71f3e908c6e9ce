use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use swarmplan_learner::{A2CConfig, Budget, OptimizerKind};

use crate::config::{ExperimentConfig, CONFIG_SCHEMA_VERSION};
use crate::run::{train_experiment, RunDir, TrainOutcome};
use crate::scenario::EnvKind;
use crate::{HarnessError, Result};

/// How one hyperparameter is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `10^c` with `c` uniform in `[lo_exp, hi_exp]`.
    LogUniform { lo_exp: f64, hi_exp: f64 },
    /// Integer uniform in `[lo, hi]`, both ends included.
    IntUniform { lo: i64, hi: i64 },
}

impl Law {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Law::Fixed { value } => value,
            Law::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Law::LogUniform { lo_exp, hi_exp } => 10f64.powf(lo_exp + (hi_exp - lo_exp) * rng.random::<f64>()),
            Law::IntUniform { lo, hi } => rng.random_range(lo..=hi) as f64,
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Law::Fixed { value } => value.is_finite(),
            Law::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            Law::LogUniform { lo_exp, hi_exp } => lo_exp.is_finite() && hi_exp.is_finite() && lo_exp <= hi_exp,
            Law::IntUniform { lo, hi } => lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("sampling law for {name} has an empty or non-finite range")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub samples: usize,
    pub seed: u64,
    /// Budget of every individual run.
    pub budget: Budget,
    pub lr_value: Law,
    pub lr_policy: Law,
    pub sigma: Law,
    pub p: Law,
    pub n_steps: Law,
    pub lambda: Law,
    pub optimizer: Vec<OptimizerKind>,
}

impl SweepSpec {
    pub fn rescue(samples: usize, seed: u64, budget: Budget) -> Self {
        Self {
            samples,
            seed,
            budget,
            lr_value: Law::LogUniform { lo_exp: -5.0, hi_exp: 0.0 },
            lr_policy: Law::LogUniform { lo_exp: -5.0, hi_exp: 0.0 },
            sigma: Law::Uniform { lo: 0.1, hi: 2.0 },
            p: Law::IntUniform { lo: 1, hi: 10 },
            n_steps: Law::IntUniform { lo: 2, hi: 5 },
            lambda: Law::Fixed { value: 1.0 },
            optimizer: vec![OptimizerKind::Sgd, OptimizerKind::Adam],
        }
    }

    pub fn battle(samples: usize, seed: u64, budget: Budget) -> Self {
        Self {
            lr_value: Law::LogUniform { lo_exp: -6.0, hi_exp: -3.0 },
            lr_policy: Law::LogUniform { lo_exp: -6.0, hi_exp: -3.0 },
            sigma: Law::Uniform { lo: 0.1, hi: 3.0 },
            n_steps: Law::IntUniform { lo: 2, hi: 10 },
            lambda: Law::LogUniform { lo_exp: -3.0, hi_exp: 3.0 },
            ..Self::rescue(samples, seed, budget)
        }
    }

    pub fn for_env(env: EnvKind, samples: usize, seed: u64, budget: Budget) -> Self {
        match env {
            EnvKind::Rescue => Self::rescue(samples, seed, budget),
            EnvKind::Battle => Self::battle(samples, seed, budget),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, law) in [
            ("lr_value", &self.lr_value),
            ("lr_policy", &self.lr_policy),
            ("sigma", &self.sigma),
            ("p", &self.p),
            ("n_steps", &self.n_steps),
            ("lambda", &self.lambda),
        ] {
            law.check(name)?;
        }
        if self.optimizer.is_empty() {
            return Err(HarnessError::Config("no optimizer to choose from".into()));
        }
        if self.budget == Budget::default() {
            return Err(HarnessError::Config("the per-run budget is not set".into()));
        }
        Ok(())
    }
}

/// A sweep file: the base experiment and the laws applied on top of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchFile {
    pub schema_version: u32,
    pub base: ExperimentConfig,
    pub search: SweepSpec,
}

impl SearchFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if f.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "sweep schema version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        f.base.validate()?;
        f.search.validate()?;
        Ok(f)
    }
}

/// Draws `spec.samples` configurations; the same spec always yields the same list.
pub fn sample_configs(spec: &SweepSpec, base: &A2CConfig) -> Vec<A2CConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.samples)
        .map(|k| {
            let optimizer = spec.optimizer[rng.random_range(0..spec.optimizer.len())];
            A2CConfig {
                lr_value: spec.lr_value.sample(&mut rng),
                lr_policy: spec.lr_policy.sample(&mut rng),
                sigma: spec.sigma.sample(&mut rng),
                p: spec.p.sample(&mut rng).max(1.0) as usize,
                n_steps: spec.n_steps.sample(&mut rng).max(1.0) as usize,
                lambda: spec.lambda.sample(&mut rng),
                optimizer,
                seed: base.seed.wrapping_add(k as u64),
                ..base.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRun {
    pub index: usize,
    pub a2c: A2CConfig,
    pub run_dir: PathBuf,
    pub outcome: Option<TrainOutcome>,
    pub error: Option<String>,
}

impl SearchRun {
    pub fn score(&self) -> Option<f64> {
        self.outcome.as_ref().map(|o| o.eval.mean_return())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Successful runs best first (highest mean evaluation return), then failures.
    pub ranked: Vec<SearchRun>,
}

impl SearchOutcome {
    pub fn best(&self) -> Option<&SearchRun> {
        self.ranked.first().filter(|r| r.outcome.is_some())
    }

    pub fn failures(&self) -> usize {
        self.ranked.iter().filter(|r| r.outcome.is_none()).count()
    }
}

/// Trains one run per sampled configuration under `root`, one after another.
/// A failing run is recorded and the sweep moves on.
pub fn hyperparameter_search(spec: &SweepSpec, base: &ExperimentConfig, root: impl AsRef<Path>) -> Result<SearchOutcome> {
    spec.validate()?;
    base.validate()?;
    let root = root.as_ref();
    fs::create_dir_all(root)?;
    fs::write(root.join("sweep.json"), serde_json::to_string_pretty(spec)?)?;

    let mut runs = Vec::new();
    for (index, a2c) in sample_configs(spec, &base.a2c).into_iter().enumerate() {
        let cfg = ExperimentConfig { a2c: a2c.clone(), budget: spec.budget, output_dir: root.to_path_buf(), ..base.clone() };
        let dir = RunDir::create(root, &format!("run-{index:03}"))?;
        let result = cfg.validate().and_then(|_| train_experiment(&cfg, &dir));
        let (outcome, error) = match result {
            Ok(o) => (Some(o), None),
            Err(e) => {
                log::warn!("run {index} failed: {e}");
                fs::write(dir.path.join("error.txt"), format!("{e}\n"))?;
                if !dir.config_path().exists() {
                    fs::write(dir.config_path(), serde_json::to_string_pretty(&cfg)?)?;
                }
                (None, Some(e.to_string()))
            }
        };
        runs.push(SearchRun { index, a2c, run_dir: dir.path, outcome, error });
    }

    runs.sort_by(|a, b| match (a.score(), b.score()) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    let outcome = SearchOutcome { ranked: runs };
    fs::write(root.join("ranking.json"), serde_json::to_string_pretty(&outcome)?)?;
    Ok(outcome)
}
