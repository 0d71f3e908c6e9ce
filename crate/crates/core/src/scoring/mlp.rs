use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, ScoringError};

pub const HIDDEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out x in`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weight: Array2::zeros((output, input)), bias: Array1::zeros(output) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Weights uniform in `(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`; zero biases.
    GlorotUniform,
    Zeros,
}

/// Fully connected network with rectifiers between layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer (the network input first).
    inputs: Vec<Array1<f64>>,
    /// Pre-activation output of each layer.
    pre: Vec<Array1<f64>>,
    shape: Vec<(usize, usize)>,
}

impl MlpCache {
    /// Smallest |pre-activation| over the hidden layers; distance to the nearest kink.
    pub fn kink_margin(&self) -> f64 {
        let hidden = self.pre.len().saturating_sub(1);
        self.pre[..hidden]
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

impl Mlp {
    pub fn init(sizes: &[usize], scheme: InitScheme, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least one layer");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let mut layer = Dense::zeros(fan_in, fan_out);
                if scheme == InitScheme::GlorotUniform {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    layer.weight.mapv_inplace(|_| rng.random_range(-a..a));
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn seeded(sizes: &[usize], seed: u64) -> Self {
        Self::init(sizes, InitScheme::GlorotUniform, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Same shape, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weight.ncols(), l.weight.nrows()))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").weight.nrows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.weight.nrows()));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn forward_vec(&self, input: &[f64]) -> Result<(Array1<f64>, MlpCache)> {
        if input.len() != self.input_dim() {
            return Err(ScoringError::DimensionMismatch(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(ScoringError::NonFinite("network input"));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = Array1::from_vec(input.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.weight.dot(&x) + &layer.bias;
            inputs.push(x);
            x = if k == last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            pre.push(z);
        }
        let shape = self.layers.iter().map(|l| l.weight.dim()).collect();
        Ok((x, MlpCache { inputs, pre, shape }))
    }

    /// Scalar output of a single-output network.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, MlpCache)> {
        if self.output_dim() != 1 {
            return Err(ScoringError::DimensionMismatch(format!(
                "scalar forward on a network with {} outputs",
                self.output_dim()
            )));
        }
        let (out, cache) = self.forward_vec(input)?;
        Ok((out[0], cache))
    }

    /// Reverse pass for `upstream . output`; adds parameter gradients into
    /// `grads` and returns the gradient with respect to the input.
    pub fn backward_into(&self, cache: &MlpCache, upstream: &[f64], grads: &mut Mlp) -> Result<Array1<f64>> {
        let shape: Vec<_> = self.layers.iter().map(|l| l.weight.dim()).collect();
        if shape != cache.shape || grads.layers.len() != self.layers.len() {
            return Err(ScoringError::StaleCache);
        }
        if upstream.len() != self.output_dim() {
            return Err(ScoringError::DimensionMismatch(format!(
                "upstream has {} entries, network outputs {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut delta = Array1::from_vec(upstream.to_vec());
        for k in (0..self.layers.len()).rev() {
            if k != last {
                delta.zip_mut_with(&cache.pre[k], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let g = &mut grads.layers[k];
            let x = &cache.inputs[k];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let mut row = g.weight.row_mut(o);
                row.scaled_add(d, x);
            }
            delta = self.layers[k].weight.t().dot(&delta);
        }
        Ok(delta)
    }

    /// Gradients of `upstream * output` for a single-output network.
    pub fn backward(&self, cache: &MlpCache, upstream: f64) -> Result<(Mlp, Array1<f64>)> {
        let mut grads = self.zeros_like();
        let dx = self.backward_into(cache, &[upstream], &mut grads)?;
        Ok((grads, dx))
    }

    /// Parameters in layer order: each layer's weights (row-major) then its bias.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    /// Inverse of [`Mlp::flat`]; returns how many values were consumed.
    pub fn set_flat(&mut self, values: &[f64]) -> Result<usize> {
        if values.len() < self.num_params() {
            return Err(ScoringError::DimensionMismatch(format!(
                "{} values for {} parameters",
                values.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *w = values[at];
                at += 1;
            }
        }
        Ok(at)
    }
}
