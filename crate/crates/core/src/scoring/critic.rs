use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::mlp::{InitScheme, Mlp, MlpCache, HIDDEN};
use super::{Entity, Result, ScoringError};

/// State value from mean-pooled per-entity embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    /// `[kinds + feat_dim, 32, 32]`
    pub embed: Mlp,
    /// `[32, 32, 1]`
    pub head: Mlp,
    pub n_kinds: usize,
    pub feat_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads {
    pub embed: Mlp,
    pub head: Mlp,
}

impl CriticGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.embed.flat();
        v.extend(self.head.flat());
        v
    }
}

/// Correctly rounded sum (Shewchuk). Independent of input order.
fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut k = 0;
        for idx in 0..partials.len() {
            let mut y = partials[idx];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[k] = lo;
                k += 1;
            }
            x = hi;
        }
        partials.truncate(k);
        partials.push(x);
    }
    // round-half-even correction over the top partials
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        n -= 1;
        let x = hi;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

impl CriticParams {
    pub fn new(n_kinds: usize, feat_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embed = Mlp::init(&[n_kinds + feat_dim, HIDDEN, HIDDEN], InitScheme::GlorotUniform, &mut rng);
        let head = Mlp::init(&[HIDDEN, HIDDEN, 1], InitScheme::GlorotUniform, &mut rng);
        Self { embed, head, n_kinds, feat_dim }
    }

    pub fn zero_grads(&self) -> CriticGrads {
        CriticGrads { embed: self.embed.zeros_like(), head: self.head.zeros_like() }
    }

    pub fn num_params(&self) -> usize {
        self.embed.num_params() + self.head.num_params()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.embed.flat();
        v.extend(self.head.flat());
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
        let used = self.embed.set_flat(values)?;
        self.head.set_flat(&values[used..])?;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.embed.is_finite() && self.head.is_finite()
    }

    /// One-hot kind followed by the features, zero padded to `feat_dim`.
    fn entity_input(&self, e: &Entity) -> Result<Vec<f64>> {
        if e.kind >= self.n_kinds || e.features.len() > self.feat_dim {
            return Err(ScoringError::DimensionMismatch(format!(
                "entity of kind {} with {} features (critic takes {} kinds, {} features)",
                e.kind,
                e.features.len(),
                self.n_kinds,
                self.feat_dim
            )));
        }
        let mut x = vec![0.0; self.n_kinds + self.feat_dim];
        x[e.kind] = 1.0;
        x[self.n_kinds..self.n_kinds + e.features.len()].copy_from_slice(&e.features);
        Ok(x)
    }

    fn pooled(&self, entities: &[Entity]) -> Result<(Array1<f64>, Vec<MlpCache>)> {
        if entities.is_empty() {
            return Err(ScoringError::EmptyState);
        }
        let mut embs = Vec::with_capacity(entities.len());
        let mut caches = Vec::with_capacity(entities.len());
        for e in entities {
            let (z, c) = self.embed.forward_vec(&self.entity_input(e)?)?;
            embs.push(z);
            caches.push(c);
        }
        let count = entities.len() as f64;
        let mean = Array1::from_shape_fn(HIDDEN, |d| exact_sum(embs.iter().map(|z| z[d])) / count);
        Ok((mean, caches))
    }

    pub fn value(&self, entities: &[Entity]) -> Result<f64> {
        let (mean, _) = self.pooled(entities)?;
        Ok(self.head.forward(mean.as_slice().expect("contiguous"))?.0)
    }

    /// Value and the parameter gradient of `upstream * value`.
    pub fn value_and_grad(&self, entities: &[Entity], upstream: f64) -> Result<(f64, CriticGrads)> {
        let mut grads = self.zero_grads();
        let v = self.accumulate_grad(entities, upstream, &mut grads)?;
        Ok((v, grads))
    }

    pub fn accumulate_grad(&self, entities: &[Entity], upstream: f64, grads: &mut CriticGrads) -> Result<f64> {
        let (mean, caches) = self.pooled(entities)?;
        let (v, hc) = self.head.forward(mean.as_slice().expect("contiguous"))?;
        let dmean = self.head.backward_into(&hc, &[upstream], &mut grads.head)?;
        let demb = dmean / entities.len() as f64;
        let demb = demb.as_slice().expect("contiguous");
        for c in &caches {
            self.embed.backward_into(c, demb, &mut grads.embed)?;
        }
        Ok(v)
    }

    /// Distance to the nearest rectifier kink over all embeddings and the head.
    pub fn kink_margin(&self, entities: &[Entity]) -> Result<f64> {
        let (mean, caches) = self.pooled(entities)?;
        let (_, hc) = self.head.forward(mean.as_slice().expect("contiguous"))?;
        Ok(caches.iter().map(MlpCache::kink_margin).fold(hc.kink_margin(), f64::min))
    }

    pub fn write_checkpoint(&self, ck: &mut Checkpoint) {
        ck.push_mlp("critic.embed", &self.embed);
        ck.push_mlp("critic.head", &self.head);
        ck.set_meta("critic_kinds", self.n_kinds.into());
        ck.set_meta("critic_feat_dim", self.feat_dim.into());
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let c = Self {
            embed: ck.mlp("critic.embed")?,
            head: ck.mlp("critic.head")?,
            n_kinds: ck.meta_usize("critic_kinds")?,
            feat_dim: ck.meta_usize("critic_feat_dim")?,
        };
        if c.embed.input_dim() != c.n_kinds + c.feat_dim || c.embed.output_dim() != c.head.input_dim() {
            return Err(ScoringError::Checkpoint("critic shapes disagree".into()));
        }
        Ok(c)
    }
}
