//! Container: 8-byte magic, u64 LE header length, JSON header, then LE f32 data in header order.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::mlp::{Dense, Mlp};
use super::{Result, ScoringError};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SWPLCKPT";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub tensors: Vec<NamedTensor>,
    pub meta: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    tensors: Vec<TensorHeader>,
    #[serde(default)]
    meta: Map<String, Value>,
}

fn err(msg: impl Into<String>) -> ScoringError {
    ScoringError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, values: impl IntoIterator<Item = f64>) {
        let data: Vec<f32> = values.into_iter().map(|v| v as f32).collect();
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.tensors.push(NamedTensor { name: name.into(), shape, data });
    }

    pub fn push_mlp(&mut self, prefix: &str, net: &Mlp) {
        for (k, l) in net.layers.iter().enumerate() {
            let (o, i) = l.weight.dim();
            self.push(format!("{prefix}.{k}.weight"), vec![o, i], l.weight.iter().copied());
            self.push(format!("{prefix}.{k}.bias"), vec![o], l.bias.iter().copied());
        }
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn mlp(&self, prefix: &str) -> Result<Mlp> {
        let mut layers = Vec::new();
        while let Some(w) = self.get(&format!("{prefix}.{}.weight", layers.len())) {
            let b = self
                .get(&format!("{prefix}.{}.bias", layers.len()))
                .ok_or_else(|| err(format!("missing bias for {}", w.name)))?;
            let [o, i] = w.shape[..] else {
                return Err(err(format!("{} is not a matrix", w.name)));
            };
            if b.shape != [o] {
                return Err(err(format!("{} has shape {:?}, expected [{o}]", b.name, b.shape)));
            }
            let weight = Array2::from_shape_vec((o, i), w.data.iter().map(|&v| v as f64).collect())
                .map_err(|e| err(e.to_string()))?;
            let bias = Array1::from_iter(b.data.iter().map(|&v| v as f64));
            if let Some(prev) = layers.last() {
                let prev: &Dense = prev;
                if prev.weight.nrows() != i {
                    return Err(err(format!("{} does not chain with the previous layer", w.name)));
                }
            }
            layers.push(Dense { weight, bias });
        }
        if layers.is_empty() {
            return Err(err(format!("no tensors under {prefix}")));
        }
        let net = Mlp { layers };
        if !net.is_finite() {
            return Err(ScoringError::NonFinite("checkpoint parameters"));
        }
        Ok(net)
    }

    pub fn set_meta(&mut self, key: &str, value: Value) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| err(format!("missing integer metadata {key}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format_version: CHECKPOINT_VERSION,
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorHeader { name: t.name.clone(), shape: t.shape.clone() })
                .collect(),
            meta: self.meta.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + json.len() + 4 * self.tensors.iter().map(|t| t.data.len()).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(err("not a checkpoint file"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16usize.saturating_add(len)).ok_or_else(|| err("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| err(format!("bad header: {e}")))?;
        if header.format_version != CHECKPOINT_VERSION {
            return Err(err(format!("unsupported format version {}", header.format_version)));
        }
        let mut at = 16 + len;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for t in header.tensors {
            let count: usize = t.shape.iter().product();
            let raw = bytes
                .get(at..at + 4 * count)
                .ok_or_else(|| err(format!("truncated data for {}", t.name)))?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            at += 4 * count;
            tensors.push(NamedTensor { name: t.name, shape: t.shape, data });
        }
        if at != bytes.len() {
            return Err(err("trailing bytes after tensor data"));
        }
        Ok(Self { tensors, meta: header.meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_bytes())
            .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| err(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{CriticParams, ScoringModel};

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let model = ScoringModel::new(4, 3, 2, 17);
        let critic = CriticParams::new(3, 5, 18);
        let mut ck = Checkpoint::new();
        model.write_checkpoint(&mut ck);
        critic.write_checkpoint(&mut ck);
        ck.set_meta("note", "x".into());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ck);

        let m2 = ScoringModel::from_checkpoint(&loaded).unwrap();
        let c2 = CriticParams::from_checkpoint(&loaded).unwrap();
        let mut again = Checkpoint::new();
        m2.write_checkpoint(&mut again);
        c2.write_checkpoint(&mut again);
        again.set_meta("note", "x".into());
        assert_eq!(again.to_bytes(), std::fs::read(&path).unwrap());
        // loaded parameters are f32-representable, so a second trip is the identity
        let m3 = ScoringModel::from_checkpoint(&Checkpoint::from_bytes(&again.to_bytes()).unwrap()).unwrap();
        assert_eq!(m3, m2);
    }

    #[test]
    fn rejects_corruption() {
        let mut ck = Checkpoint::new();
        ScoringModel::new(1, 1, 0, 0).write_checkpoint(&mut ck);
        let bytes = ck.to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::from_bytes(b"garbage").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
    }
}
