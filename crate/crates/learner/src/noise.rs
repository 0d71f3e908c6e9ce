use std::collections::VecDeque;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::NoiseMode;

/// Sliding window of the last `p` noise terms for every entry of one score table.
#[derive(Debug, Clone)]
pub struct NoiseWindow {
    p: usize,
    mode: NoiseMode,
    queue: VecDeque<Array2<f64>>,
}

impl NoiseWindow {
    pub fn new(p: usize, mode: NoiseMode) -> Self {
        Self { p: p.max(1), mode, queue: VecDeque::new() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Back to an all-zero history.
    pub fn reset(&mut self) {
        self.queue.clear();
    }

    fn window_sum(&self, dim: (usize, usize)) -> Array2<f64> {
        let mut s = Array2::zeros(dim);
        for q in &self.queue {
            s += q;
        }
        s
    }

    /// Draws the perturbed table for `mean`. Each innovation has variance `sigma / p`.
    pub fn sample(&mut self, mean: &Array2<f64>, sigma: f64, rng: &mut impl Rng) -> Array2<f64> {
        if self.queue.front().is_some_and(|q| q.dim() != mean.dim()) {
            self.reset();
        }
        let std = (sigma / self.p as f64).sqrt();
        let eps = Array2::from_shape_simple_fn(mean.dim(), || std * rng.sample::<f64, _>(StandardNormal));
        let pushed = match self.mode {
            NoiseMode::Innovation => eps,
            NoiseMode::Residual => self.window_sum(mean.dim()) + eps,
        };
        let out = match self.mode {
            NoiseMode::Innovation => {
                self.push(pushed);
                mean + &self.window_sum(mean.dim())
            }
            NoiseMode::Residual => {
                let out = mean + &pushed;
                self.push(pushed);
                out
            }
        };
        out
    }

    fn push(&mut self, v: Array2<f64>) {
        self.queue.push_back(v);
        while self.queue.len() > self.p {
            self.queue.pop_front();
        }
    }
}
