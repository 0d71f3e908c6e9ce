use std::io::Write;

use serde::{Deserialize, Serialize};
use swarmplan_learner::EvalSummary;
use swarmplan_rescue::oracles::MAX_DP_VICTIMS;

use crate::evaluate::{evaluate_policy, LearnedPolicy, Policy};
use crate::scenario::Scenario;
use crate::{HarnessError, Result};

/// Largest victim count for which the sweep also runs the exact topline.
pub const TOPLINE_MAX_VICTIMS: usize = 10;

/// One test size of a train-small/test-large table. Means are steps to solve;
/// deltas are percent improvement over the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub train: String,
    pub test: String,
    pub method: String,
    pub baseline: f64,
    pub topline: Option<f64>,
    pub method_mean: f64,
    pub method_stderr: f64,
    pub method_failure_pct: f64,
    pub baseline_delta_pct: f64,
    pub topline_delta_pct: Option<f64>,
    pub method_delta_pct: f64,
}

pub fn delta_pct(baseline: f64, method: f64) -> f64 {
    100.0 * (baseline - method) / baseline
}

pub fn mean_steps_to_solve(s: &EvalSummary) -> f64 {
    let total: f64 = s.episodes.iter().map(|e| swarmplan_rescue::steps_to_solve(e.length)).sum();
    total / s.episodes.len().max(1) as f64
}

/// Evaluates the same policy on every test scenario without retraining.
pub fn generalization_sweep(
    policy: &LearnedPolicy,
    train: &Scenario,
    tests: &[Scenario],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(tests.len());
    for test in tests {
        let Scenario::Rescue { m, .. } = test else {
            return Err(HarnessError::Config(format!("sweep tables are defined for rescue sizes, got {test}")));
        };
        policy.check_fits(test)?;
        let baseline = mean_steps_to_solve(&evaluate_policy(&Policy::RescueBaseline, test, seeds)?);
        let topline = if *m <= TOPLINE_MAX_VICTIMS.min(MAX_DP_VICTIMS) {
            Some(mean_steps_to_solve(&evaluate_policy(&Policy::RescueTopline, test, seeds)?))
        } else {
            None
        };
        let learned = evaluate_policy(&Policy::Learned(policy.clone()), test, seeds)?;
        let method_mean = mean_steps_to_solve(&learned);
        rows.push(SweepRow {
            train: train.to_string(),
            test: test.to_string(),
            method: Policy::Learned(policy.clone()).name(),
            baseline,
            topline,
            method_mean,
            method_stderr: learned.stderr_length(),
            method_failure_pct: 100.0 * learned.failures() as f64 / learned.episodes.len() as f64,
            baseline_delta_pct: delta_pct(baseline, baseline),
            topline_delta_pct: topline.map(|t| delta_pct(baseline, t)),
            method_delta_pct: delta_pct(baseline, method_mean),
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
