//! Inference procedures mapping score tables and constraints to assignments.
//!
//! All procedures are pure functions of their inputs. Every tie is broken
//! deterministically (lowest index, then highest score) so repeated calls on
//! the same instance always agree.

mod dump;
mod frank_wolfe;
mod rounding;
mod simplex;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dump::InstanceDump;
pub use frank_wolfe::{fw_line_search, fw_linear_oracle, quad_relax_solve, quad_relax_trace, FwTrace};
pub use rounding::greedy_round;
pub use simplex::lp_relax_solve;

/// Slack allowed on capacity rows of a relaxed assignment.
pub const FEAS_EPS: f64 = 1e-8;

/// Largest `(m + 1)^n` that [`brute_force_assign`] will enumerate.
pub const BRUTE_FORCE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative value in {0}")]
    Negative(&'static str),
    #[error("empty instance: need at least one agent and one task")]
    Empty,
    #[error("LP solver failure: {0}")]
    SolverFailure(String),
    #[error("instance too large for exhaustive enumeration: (m+1)^n = {0}")]
    TooLarge(u64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = AssignError> = std::result::Result<T, E>;

fn check_finite(a: &Array2<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(AssignError::NonFinite(what))
    }
}

/// Agent-task scores `h` (n x m) and optional task-task scores `g` (m x m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    h: Array2<f64>,
    g: Option<Array2<f64>>,
}

impl ScoreTable {
    pub fn new(h: Array2<f64>, g: Option<Array2<f64>>) -> Result<Self> {
        let (n, m) = h.dim();
        if n == 0 || m == 0 {
            return Err(AssignError::Empty);
        }
        check_finite(&h, "h")?;
        if let Some(g) = &g {
            if g.dim() != (m, m) {
                return Err(AssignError::DimensionMismatch(format!(
                    "g is {:?}, expected ({m}, {m})",
                    g.dim()
                )));
            }
            check_finite(g, "g")?;
        }
        Ok(Self { h, g })
    }

    pub fn linear(h: Array2<f64>) -> Result<Self> {
        Self::new(h, None)
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn m(&self) -> usize {
        self.h.ncols()
    }

    pub fn h(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn g(&self) -> Option<&Array2<f64>> {
        self.g.as_ref()
    }

    pub fn without_g(&self) -> Self {
        Self { h: self.h.clone(), g: None }
    }
}

/// Contributions `mu` (n x m) and capacities `u` (m) defining the feasible polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    mu: Array2<f64>,
    u: Array1<f64>,
}

impl ConstraintSet {
    pub fn new(mu: Array2<f64>, u: Array1<f64>) -> Result<Self> {
        if mu.ncols() != u.len() {
            return Err(AssignError::DimensionMismatch(format!(
                "mu has {} tasks but u has {}",
                mu.ncols(),
                u.len()
            )));
        }
        check_finite(&mu, "mu")?;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(AssignError::NonFinite("u"));
        }
        if mu.iter().any(|&v| v < 0.0) {
            return Err(AssignError::Negative("mu"));
        }
        if u.iter().any(|&v| v < 0.0) {
            return Err(AssignError::Negative("u"));
        }
        Ok(Self { mu, u })
    }

    /// Unit contributions with the same capacity on every task.
    pub fn uniform(n: usize, m: usize, capacity: f64) -> Result<Self> {
        Self::new(Array2::ones((n, m)), Array1::from_elem(m, capacity))
    }

    pub fn n(&self) -> usize {
        self.mu.nrows()
    }

    pub fn m(&self) -> usize {
        self.mu.ncols()
    }

    pub fn mu(&self) -> &Array2<f64> {
        &self.mu
    }

    pub fn u(&self) -> &Array1<f64> {
        &self.u
    }

    fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        if self.mu.dim() != (n, m) {
            return Err(AssignError::DimensionMismatch(format!(
                "constraints are {:?}, scores are ({n}, {m})",
                self.mu.dim()
            )));
        }
        Ok(())
    }
}

/// A hard assignment: `targets[i]` is the task of agent `i`, or `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub targets: Vec<Option<usize>>,
}

impl Assignment {
    pub fn unassigned(n: usize) -> Self {
        Self { targets: vec![None; n] }
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    /// The 0/1 matrix form of this assignment.
    pub fn to_matrix(&self, m: usize) -> Result<Array2<f64>> {
        let mut beta = Array2::zeros((self.n(), m));
        for (i, t) in self.targets.iter().enumerate() {
            if let Some(j) = *t {
                if j >= m {
                    return Err(AssignError::DimensionMismatch(format!(
                        "agent {i} targets task {j} but m = {m}"
                    )));
                }
                beta[[i, j]] = 1.0;
            }
        }
        Ok(beta)
    }
}

/// A fractional assignment matrix in the relaxed polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedAssignment {
    pub beta: Array2<f64>,
}

impl RelaxedAssignment {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { beta: Array2::zeros((n, m)) }
    }

    pub fn from_assignment(a: &Assignment, m: usize) -> Result<Self> {
        Ok(Self { beta: a.to_matrix(m)? })
    }

    /// Whether `beta` lies in the relaxed polytope of `cons` (capacity slack [`FEAS_EPS`]).
    pub fn is_feasible(&self, cons: &ConstraintSet) -> bool {
        let (n, m) = self.beta.dim();
        if cons.check_dims(n, m).is_err() {
            return false;
        }
        let tol = 1e-9;
        if self.beta.iter().any(|&b| !(-tol..=1.0 + tol).contains(&b)) {
            return false;
        }
        if self.beta.rows().into_iter().any(|r| r.sum() > 1.0 + tol) {
            return false;
        }
        (0..m).all(|j| {
            let load: f64 = (0..n).map(|i| cons.mu[[i, j]] * self.beta[[i, j]]).sum();
            load <= cons.u[j] + FEAS_EPS
        })
    }

    /// Rounds entries within `1e-9` of 0 or 1 and clips the rest into `[0, 1]`.
    pub(crate) fn cleaned(mut self) -> Self {
        self.beta.mapv_inplace(|b| {
            if b < 1e-9 {
                0.0
            } else if b > 1.0 - 1e-9 {
                1.0
            } else {
                b
            }
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    pub max_iters: usize,
    /// Stop once the Frank-Wolfe gap is at most `gap_tol * (1 + |objective|)`.
    pub gap_tol: f64,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self { max_iters: 50, gap_tol: 1e-6 }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(AssignError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.gap_tol > 0.0) {
            return Err(AssignError::InvalidConfig("gap_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Assigns every agent to its highest-scoring task; ties go to the lowest index.
pub fn amax_assign(scores: &ScoreTable) -> Assignment {
    let targets = scores
        .h
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            Some(best)
        })
        .collect();
    Assignment { targets }
}

/// Column sums of `beta`: the total (fractional) number of agents per task.
fn task_mass(beta: &Array2<f64>) -> Array1<f64> {
    beta.sum_axis(ndarray::Axis(0))
}

/// `sum_{i,j} beta_ij h_ij + sum_{i,j,k,l} beta_ij beta_kl g_jl`, self-pairs included.
pub fn relaxed_objective(beta: &Array2<f64>, scores: &ScoreTable) -> Result<f64> {
    if beta.dim() != scores.h.dim() {
        return Err(AssignError::DimensionMismatch(format!(
            "beta is {:?}, scores are {:?}",
            beta.dim(),
            scores.h.dim()
        )));
    }
    let linear = (beta * &scores.h).sum();
    let quad = match &scores.g {
        Some(g) => {
            let c = task_mass(beta);
            c.dot(&g.dot(&c))
        }
        None => 0.0,
    };
    Ok(linear + quad)
}

pub fn objective_value(assign: &Assignment, scores: &ScoreTable) -> Result<f64> {
    if assign.n() != scores.n() {
        return Err(AssignError::DimensionMismatch(format!(
            "assignment has {} agents, scores have {}",
            assign.n(),
            scores.n()
        )));
    }
    let m = scores.m();
    let mut linear = 0.0;
    let mut counts = vec![0.0; m];
    for (i, t) in assign.targets.iter().enumerate() {
        if let Some(j) = *t {
            if j >= m {
                return Err(AssignError::DimensionMismatch(format!("task {j} out of range")));
            }
            linear += scores.h[[i, j]];
            counts[j] += 1.0;
        }
    }
    let quad = match &scores.g {
        Some(g) => {
            let mut q = 0.0;
            for (j, &cj) in counts.iter().enumerate() {
                if cj == 0.0 {
                    continue;
                }
                for (l, &cl) in counts.iter().enumerate() {
                    q += cj * cl * g[[j, l]];
                }
            }
            q
        }
        None => 0.0,
    };
    Ok(linear + quad)
}

pub fn feasible(assign: &Assignment, cons: &ConstraintSet) -> Result<bool> {
    cons.check_dims(assign.n(), cons.m())?;
    let mut load = vec![0.0; cons.m()];
    for (i, t) in assign.targets.iter().enumerate() {
        if let Some(j) = *t {
            if j >= cons.m() {
                return Err(AssignError::DimensionMismatch(format!("task {j} out of range")));
            }
            load[j] += cons.mu[[i, j]];
        }
    }
    Ok(load.iter().zip(cons.u.iter()).all(|(l, u)| l <= u))
}

/// Exhaustive search over every hard assignment, unassigned included.
///
/// Candidates are visited in lexicographic order of their target vectors
/// (`None` before `Some(0)` before `Some(1)`, ...) and only a strictly better
/// objective replaces the incumbent, so ties resolve to the lexicographically
/// smallest maximizer.
pub fn brute_force_assign(scores: &ScoreTable, cons: &ConstraintSet) -> Result<Assignment> {
    let (n, m) = (scores.n(), scores.m());
    cons.check_dims(n, m)?;
    let base = m as u64 + 1;
    let total = (0..n).try_fold(1u64, |acc, _| acc.checked_mul(base));
    match total {
        Some(t) if t <= BRUTE_FORCE_BUDGET => {}
        Some(t) => return Err(AssignError::TooLarge(t)),
        None => return Err(AssignError::TooLarge(u64::MAX)),
    }

    let mut digits = vec![0usize; n];
    let mut current = Assignment::unassigned(n);
    let mut best: Option<(f64, Assignment)> = None;
    loop {
        for (t, &d) in current.targets.iter_mut().zip(&digits) {
            *t = if d == 0 { None } else { Some(d - 1) };
        }
        if feasible(&current, cons)? {
            let value = objective_value(&current, scores)?;
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, current.clone()));
            }
        }
        // odometer increment, last agent varies fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.map(|(_, a)| a).unwrap_or_else(|| Assignment::unassigned(n)));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] <= m {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Which coordination inference procedure turns scores into an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Inference {
    Amax,
    Lp,
    Quad {
        #[serde(flatten)]
        fw: FwConfig,
    },
}

impl Inference {
    pub fn quad() -> Self {
        Inference::Quad { fw: FwConfig::default() }
    }

    pub fn uses_g(&self) -> bool {
        matches!(self, Inference::Quad { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Inference::Amax => "amax",
            Inference::Lp => "lp",
            Inference::Quad { .. } => "quad",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "amax" => Some(Inference::Amax),
            "lp" => Some(Inference::Lp),
            "quad" => Some(Inference::quad()),
            _ => None,
        }
    }

    pub fn infer(&self, scores: &ScoreTable, cons: &ConstraintSet) -> Result<Assignment> {
        match self {
            Inference::Amax => Ok(amax_assign(scores)),
            Inference::Lp => {
                let relaxed = lp_relax_solve(scores, cons)?;
                greedy_round(&relaxed, scores, cons)
            }
            Inference::Quad { fw } => {
                let start = RelaxedAssignment::zeros(scores.n(), scores.m());
                let relaxed = quad_relax_solve(scores, cons, fw, &start)?;
                greedy_round(&relaxed, scores, cons)
            }
        }
    }
}
