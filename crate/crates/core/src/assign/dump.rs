//! JSON dump of a single inference instance, used for golden tests and debugging.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{AssignError, ConstraintSet, RelaxedAssignment, Result, ScoreTable};

pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDump {
    pub version: u32,
    pub h: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    pub mu: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<f64>>>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(AssignError::DimensionMismatch(format!("ragged rows in {what}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((r, c), flat)
        .map_err(|e| AssignError::DimensionMismatch(format!("{what}: {e}")))
}

impl InstanceDump {
    pub fn new(scores: &ScoreTable, cons: &ConstraintSet, beta: Option<&RelaxedAssignment>) -> Self {
        Self {
            version: DUMP_VERSION,
            h: rows(scores.h()),
            g: scores.g().map(rows),
            mu: rows(cons.mu()),
            u: cons.u().to_vec(),
            beta: beta.map(|b| rows(&b.beta)),
        }
    }

    pub fn scores(&self) -> Result<ScoreTable> {
        let g = self.g.as_deref().map(|g| matrix(g, "g")).transpose()?;
        ScoreTable::new(matrix(&self.h, "h")?, g)
    }

    pub fn constraints(&self) -> Result<ConstraintSet> {
        ConstraintSet::new(matrix(&self.mu, "mu")?, Array1::from_vec(self.u.clone()))
    }

    pub fn relaxed(&self) -> Result<Option<RelaxedAssignment>> {
        self.beta
            .as_deref()
            .map(|b| matrix(b, "beta").map(|beta| RelaxedAssignment { beta }))
            .transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(text)
            .map_err(|e| AssignError::InvalidConfig(format!("bad instance dump: {e}")))?;
        if dump.version != DUMP_VERSION {
            return Err(AssignError::InvalidConfig(format!(
                "unsupported dump version {}",
                dump.version
            )));
        }
        Ok(dump)
    }
}
