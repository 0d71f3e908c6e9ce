use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::mlp::{InitScheme, Mlp, HIDDEN};
use super::{Result, ScoringError};
use crate::assign::ScoreTable;

/// Borrowed per-step features for scoring.
#[derive(Debug, Clone, Copy)]
pub struct PairInputs<'a> {
    pub agents: &'a [Vec<f64>],
    pub tasks: &'a [Vec<f64>],
    /// `n x m x k` extra pair features.
    pub extras: Option<&'a Array3<f64>>,
}

/// Pairwise score networks: `h` from (agent, task, extras), `g` from (task, task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub h_net: Mlp,
    pub g_net: Mlp,
    pub agent_dim: usize,
    pub task_dim: usize,
    pub extra_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub h: Mlp,
    pub g: Mlp,
}

impl ModelGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.h.flat();
        v.extend(self.g.flat());
        v
    }

    pub fn add_assign(&mut self, other: &ModelGrads) {
        let mut a = self.flat();
        for (x, y) in a.iter_mut().zip(other.flat()) {
            *x += y;
        }
        let used = self.h.set_flat(&a).expect("congruent");
        self.g.set_flat(&a[used..]).expect("congruent");
    }
}

impl ScoringModel {
    pub fn new(agent_dim: usize, task_dim: usize, extra_dim: usize, seed: u64) -> Self {
        Self::with_scheme(agent_dim, task_dim, extra_dim, InitScheme::GlorotUniform, seed)
    }

    pub fn with_scheme(agent_dim: usize, task_dim: usize, extra_dim: usize, scheme: InitScheme, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h_net = Mlp::init(&[agent_dim + task_dim + extra_dim, HIDDEN, HIDDEN, 1], scheme, &mut rng);
        let g_net = Mlp::init(&[2 * task_dim, HIDDEN, HIDDEN, 1], scheme, &mut rng);
        Self { h_net, g_net, agent_dim, task_dim, extra_dim }
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads { h: self.h_net.zeros_like(), g: self.g_net.zeros_like() }
    }

    pub fn num_params(&self) -> usize {
        self.h_net.num_params() + self.g_net.num_params()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.h_net.flat();
        v.extend(self.g_net.flat());
        v
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(ScoringError::DimensionMismatch(format!(
                "{} values for {} parameters",
                values.len(),
                self.num_params()
            )));
        }
        let used = self.h_net.set_flat(values)?;
        self.g_net.set_flat(&values[used..])?;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.h_net.is_finite() && self.g_net.is_finite()
    }

    fn check(&self, x: &PairInputs) -> Result<()> {
        let bad = |what: &str, want: usize, got: usize| {
            Err(ScoringError::DimensionMismatch(format!("{what} has {got} features, model expects {want}")))
        };
        if x.agents.is_empty() || x.tasks.is_empty() {
            return Err(ScoringError::DimensionMismatch("need at least one agent and one task".into()));
        }
        if let Some(a) = x.agents.iter().find(|a| a.len() != self.agent_dim) {
            return bad("agent", self.agent_dim, a.len());
        }
        if let Some(t) = x.tasks.iter().find(|t| t.len() != self.task_dim) {
            return bad("task", self.task_dim, t.len());
        }
        match x.extras {
            None if self.extra_dim > 0 => bad("pair extras", self.extra_dim, 0),
            Some(e) if e.dim() != (x.agents.len(), x.tasks.len(), self.extra_dim) => Err(
                ScoringError::DimensionMismatch(format!(
                    "pair extras are {:?}, expected ({}, {}, {})",
                    e.dim(),
                    x.agents.len(),
                    x.tasks.len(),
                    self.extra_dim
                )),
            ),
            _ => Ok(()),
        }
    }

    fn h_input(&self, x: &PairInputs, i: usize, j: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(&x.agents[i]);
        buf.extend_from_slice(&x.tasks[j]);
        if let Some(e) = x.extras {
            if self.extra_dim > 0 {
                buf.extend(e.slice(ndarray::s![i, j, ..]).iter());
            }
        }
    }

    fn g_input(tasks: &[Vec<f64>], j: usize, l: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend_from_slice(&tasks[j]);
        buf.extend_from_slice(&tasks[l]);
    }

    pub fn score_h(&self, x: &PairInputs) -> Result<Array2<f64>> {
        self.check(x)?;
        let (n, m) = (x.agents.len(), x.tasks.len());
        let mut h = Array2::zeros((n, m));
        let mut buf = Vec::new();
        for i in 0..n {
            for j in 0..m {
                self.h_input(x, i, j, &mut buf);
                h[[i, j]] = self.h_net.forward(&buf)?.0;
            }
        }
        Ok(h)
    }

    pub fn score_g(&self, tasks: &[Vec<f64>]) -> Result<Array2<f64>> {
        if let Some(t) = tasks.iter().find(|t| t.len() != self.task_dim) {
            return Err(ScoringError::DimensionMismatch(format!(
                "task has {} features, model expects {}",
                t.len(),
                self.task_dim
            )));
        }
        let m = tasks.len();
        let mut g = Array2::zeros((m, m));
        let mut buf = Vec::new();
        for j in 0..m {
            for l in 0..m {
                Self::g_input(tasks, j, l, &mut buf);
                g[[j, l]] = self.g_net.forward(&buf)?.0;
            }
        }
        Ok(g)
    }

    /// Score table for one step. `g` is only evaluated when `with_g` is set.
    pub fn score_pairs(&self, x: &PairInputs, with_g: bool) -> Result<ScoreTable> {
        let h = self.score_h(x)?;
        let g = if with_g { Some(self.score_g(x.tasks)?) } else { None };
        ScoreTable::new(h, g).map_err(|_| ScoringError::NonFinite("scores"))
    }

    /// Accumulates the parameter gradient of `sum dh * h + sum dg * g`.
    pub fn backward_pairs(
        &self,
        x: &PairInputs,
        dh: &Array2<f64>,
        dg: Option<&Array2<f64>>,
        grads: &mut ModelGrads,
    ) -> Result<()> {
        self.check(x)?;
        let (n, m) = (x.agents.len(), x.tasks.len());
        if dh.dim() != (n, m) || dg.is_some_and(|d| d.dim() != (m, m)) {
            return Err(ScoringError::DimensionMismatch("upstream score gradient shape".into()));
        }
        let mut buf = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let up = dh[[i, j]];
                if up == 0.0 {
                    continue;
                }
                self.h_input(x, i, j, &mut buf);
                let (_, cache) = self.h_net.forward(&buf)?;
                self.h_net.backward_into(&cache, &[up], &mut grads.h)?;
            }
        }
        if let Some(dg) = dg {
            for j in 0..m {
                for l in 0..m {
                    let up = dg[[j, l]];
                    if up == 0.0 {
                        continue;
                    }
                    Self::g_input(x.tasks, j, l, &mut buf);
                    let (_, cache) = self.g_net.forward(&buf)?;
                    self.g_net.backward_into(&cache, &[up], &mut grads.g)?;
                }
            }
        }
        Ok(())
    }

    pub fn write_checkpoint(&self, ck: &mut Checkpoint) {
        ck.push_mlp("h_net", &self.h_net);
        ck.push_mlp("g_net", &self.g_net);
        ck.set_meta("agent_dim", self.agent_dim.into());
        ck.set_meta("task_dim", self.task_dim.into());
        ck.set_meta("extra_dim", self.extra_dim.into());
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let model = Self {
            h_net: ck.mlp("h_net")?,
            g_net: ck.mlp("g_net")?,
            agent_dim: ck.meta_usize("agent_dim")?,
            task_dim: ck.meta_usize("task_dim")?,
            extra_dim: ck.meta_usize("extra_dim")?,
        };
        let sizes_ok = model.h_net.input_dim() == model.agent_dim + model.task_dim + model.extra_dim
            && model.g_net.input_dim() == 2 * model.task_dim
            && model.h_net.output_dim() == 1
            && model.g_net.output_dim() == 1;
        if !sizes_ok {
            return Err(ScoringError::Checkpoint("network shapes disagree with feature sizes".into()));
        }
        Ok(model)
    }
}
