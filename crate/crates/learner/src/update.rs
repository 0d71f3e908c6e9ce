use ndarray::Array2;
use swarmplan_core::scoring::{CriticGrads, CriticParams, ModelGrads, PairInputs, ScoringModel};

use crate::config::A2CConfig;
use crate::optim::Optimizer;
use crate::returns::chunk_returns;
use crate::rollout::{Chunk, StepSample};
use crate::Result;

/// Log-density of `action` under independent `N(mean, sigma)` entries (`sigma` a variance).
pub fn gaussian_log_likelihood(action: &Array2<f64>, mean: &Array2<f64>, sigma: f64) -> f64 {
    let norm = -0.5 * (2.0 * std::f64::consts::PI * sigma).ln();
    action.iter().zip(mean).map(|(a, m)| norm - (a - m).powi(2) / (2.0 * sigma)).sum()
}

fn step_log_likelihood(
    s: &StepSample,
    h: &Array2<f64>,
    g: Option<&Array2<f64>>,
    sigma: f64,
) -> f64 {
    let mut l = gaussian_log_likelihood(&s.h_action, h, sigma);
    if let (Some(a), Some(g)) = (&s.g_action, g) {
        l += gaussian_log_likelihood(a, g, sigma);
    }
    l
}

fn inputs(s: &StepSample) -> PairInputs<'_> {
    PairInputs { agents: &s.obs.agent_feats, tasks: &s.obs.task_feats, extras: s.obs.pair_extras.as_ref() }
}

/// Quantities held constant while differentiating: returns, advantages and importance ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Frozen {
    pub returns: Vec<Vec<f64>>,
    pub advantages: Vec<Vec<f64>>,
    pub ratios: Vec<Vec<f64>>,
    pub log_old: Vec<Vec<f64>>,
    pub log_new: Vec<Vec<f64>>,
}

impl Frozen {
    pub fn steps(&self) -> usize {
        self.returns.iter().map(Vec::len).sum()
    }
}

pub fn freeze(model: &ScoringModel, critic: &CriticParams, chunks: &[Chunk], cfg: &A2CConfig) -> Result<Frozen> {
    let mut f = Frozen { returns: vec![], advantages: vec![], ratios: vec![], log_old: vec![], log_new: vec![] };
    for c in chunks {
        let ret = chunk_returns(c, cfg.gamma, critic)?;
        let (mut adv, mut ir, mut lo, mut ln) = (vec![], vec![], vec![], vec![]);
        for (s, r) in c.steps.iter().zip(&ret) {
            adv.push(r - critic.value(&s.obs.entities)?);
            let x = inputs(s);
            let new_h = model.score_h(&x)?;
            let new_g = match s.g_action {
                Some(_) => Some(model.score_g(x.tasks)?),
                None => None,
            };
            let old = step_log_likelihood(s, &s.h_mean, s.g_mean.as_ref(), cfg.sigma);
            let new = step_log_likelihood(s, &new_h, new_g.as_ref(), cfg.sigma);
            ir.push((new - old).exp());
            lo.push(old);
            ln.push(new);
        }
        f.returns.push(ret);
        f.advantages.push(adv);
        f.ratios.push(ir);
        f.log_old.push(lo);
        f.log_new.push(ln);
    }
    Ok(f)
}

/// Loss minimized by one update, averaged over steps:
/// `|R - V(s)| - lambda * ir * A * log l_new`, with `R`, `A`, `ir` taken from `frozen`.
pub fn composite_loss(
    model: &ScoringModel,
    critic: &CriticParams,
    chunks: &[Chunk],
    frozen: &Frozen,
    cfg: &A2CConfig,
) -> Result<(f64, f64)> {
    let (mut value, mut policy) = (0.0, 0.0);
    for (c, k) in chunks.iter().zip(0..) {
        for (s, t) in c.steps.iter().zip(0..) {
            value += (frozen.returns[k][t] - critic.value(&s.obs.entities)?).abs();
            let x = inputs(s);
            let h = model.score_h(&x)?;
            let g = match s.g_action {
                Some(_) => Some(model.score_g(x.tasks)?),
                None => None,
            };
            let l = step_log_likelihood(s, &h, g.as_ref(), cfg.sigma);
            policy -= cfg.lambda * frozen.ratios[k][t] * frozen.advantages[k][t] * l;
        }
    }
    let n = frozen.steps().max(1) as f64;
    Ok((value / n, policy / n))
}

/// Gradients of [`composite_loss`] for the scoring model and the critic.
pub fn a2c_gradients(
    model: &ScoringModel,
    critic: &CriticParams,
    chunks: &[Chunk],
    frozen: &Frozen,
    cfg: &A2CConfig,
) -> Result<(ModelGrads, CriticGrads)> {
    let mut mg = model.zero_grads();
    let mut cg = critic.zero_grads();
    let n = frozen.steps().max(1) as f64;
    for (c, k) in chunks.iter().zip(0..) {
        for (s, t) in c.steps.iter().zip(0..) {
            let v = critic.value(&s.obs.entities)?;
            let sign = (v - frozen.returns[k][t]).signum() * f64::from(v != frozen.returns[k][t]);
            if sign != 0.0 {
                critic.accumulate_grad(&s.obs.entities, sign / n, &mut cg)?;
            }

            let w = -cfg.lambda * frozen.ratios[k][t] * frozen.advantages[k][t] / (n * cfg.sigma);
            if w == 0.0 {
                continue;
            }
            let x = inputs(s);
            // d log l / d mean = (action - mean) / sigma
            let dh = (&s.h_action - &model.score_h(&x)?) * w;
            let dg = match &s.g_action {
                Some(a) => Some((a - &model.score_g(x.tasks)?) * w),
                None => None,
            };
            model.backward_pairs(&x, &dh, dg.as_ref(), &mut mg)?;
        }
    }
    Ok((mg, cg))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub value_loss: f64,
    pub policy_loss: f64,
    pub mean_ir: f64,
    pub steps: usize,
    /// The update was dropped because something was not finite.
    pub skipped: bool,
}

/// Serial parameter updater holding one optimizer per network.
#[derive(Debug, Clone)]
pub struct Updater {
    pub policy_opt: Optimizer,
    pub value_opt: Optimizer,
}

impl Updater {
    pub fn new(model: &ScoringModel, critic: &CriticParams, cfg: &A2CConfig) -> Self {
        Self {
            policy_opt: Optimizer::new(cfg.optimizer, cfg.lr_policy, model.num_params()),
            value_opt: Optimizer::new(cfg.optimizer, cfg.lr_value, critic.num_params()),
        }
    }

    pub fn update(
        &mut self,
        model: &mut ScoringModel,
        critic: &mut CriticParams,
        chunks: &[Chunk],
        cfg: &A2CConfig,
    ) -> Result<Diagnostics> {
        let frozen = freeze(model, critic, chunks, cfg)?;
        let steps = frozen.steps();
        let mut diag = Diagnostics { steps, ..Default::default() };
        if steps == 0 {
            return Ok(diag);
        }
        let n = steps as f64;
        diag.mean_ir = frozen.ratios.iter().flatten().sum::<f64>() / n;
        diag.value_loss = frozen.advantages.iter().flatten().map(|a| a.abs()).sum::<f64>() / n;
        diag.policy_loss = -cfg.lambda
            * frozen
                .ratios
                .iter()
                .flatten()
                .zip(frozen.advantages.iter().flatten())
                .zip(frozen.log_new.iter().flatten())
                .map(|((ir, a), l)| ir * a * l)
                .sum::<f64>()
            / n;

        let (mg, cg) = a2c_gradients(model, critic, chunks, &frozen, cfg)?;
        let (gm, gc) = (mg.flat(), cg.flat());
        let finite = diag.value_loss.is_finite()
            && diag.policy_loss.is_finite()
            && gm.iter().chain(&gc).all(|v| v.is_finite());
        if !finite {
            log::warn!("non-finite loss or gradient, update skipped");
            diag.skipped = true;
            return Ok(diag);
        }
        let mut p = model.flat();
        self.policy_opt.step(&mut p, &gm);
        let mut q = critic.flat();
        self.value_opt.step(&mut q, &gc);
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            log::warn!("update produced non-finite parameters, skipped");
            diag.skipped = true;
            return Ok(diag);
        }
        model.set_flat(&p)?;
        critic.set_flat(&q)?;
        Ok(diag)
    }
}
