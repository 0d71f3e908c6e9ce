//! Frank-Wolfe ascent on the quadratic assignment relaxation.

use ndarray::{Array1, Array2, Axis};

use super::simplex::{finish, PolytopeLp};
use super::{relaxed_objective, AssignError, ConstraintSet, FwConfig, RelaxedAssignment, Result, ScoreTable};

/// How many optimal-face neighbours are inspected per oracle call, and how
/// many improving moves are taken at most.
const FACE_NEIGHBOURS: usize = 32;
const FACE_MOVES: usize = 16;

/// Per-iteration record of a Frank-Wolfe run.
#[derive(Debug, Clone)]
pub struct FwTrace {
    pub beta: RelaxedAssignment,
    /// Objective at the start point and after every step.
    pub objectives: Vec<f64>,
    /// Frank-Wolfe gap observed at each iteration.
    pub gaps: Vec<f64>,
    pub converged: bool,
}

/// `(G + G^T) c` where `c` is the per-task mass of `beta`; zero without `g`.
fn quad_push(beta: &Array2<f64>, scores: &ScoreTable) -> Array1<f64> {
    match scores.g() {
        Some(g) => {
            let c = beta.sum_axis(Axis(0));
            g.dot(&c) + g.t().dot(&c)
        }
        None => Array1::zeros(beta.ncols()),
    }
}

fn gradient(beta: &Array2<f64>, scores: &ScoreTable) -> Array2<f64> {
    scores.h() + &quad_push(beta, scores)
}

/// Coefficients `(a, b)` of the objective change `b*t + a*t^2` along `current -> vertex`.
fn segment_coefficients(current: &Array2<f64>, vertex: &Array2<f64>, scores: &ScoreTable) -> (f64, f64) {
    let d = vertex - current;
    let b = (&gradient(current, scores) * &d).sum();
    let a = match scores.g() {
        Some(g) => {
            let cd = d.sum_axis(Axis(0));
            cd.dot(&g.dot(&cd))
        }
        None => 0.0,
    };
    (a, b)
}

fn best_step(a: f64, b: f64) -> f64 {
    if a.abs() <= 1e-12 {
        return if b > 0.0 { 1.0 } else { 0.0 };
    }
    if a < 0.0 {
        return (-b / (2.0 * a)).clamp(0.0, 1.0);
    }
    // convex along the segment: the maximum sits at an endpoint
    if a + b > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Exact line search on the segment `(1 - t) * current + t * vertex`, `t` in `[0, 1]`.
pub fn fw_line_search(current: &RelaxedAssignment, vertex: &RelaxedAssignment, scores: &ScoreTable) -> f64 {
    let (a, b) = segment_coefficients(&current.beta, &vertex.beta, scores);
    best_step(a, b)
}

fn segment_gain(current: &Array2<f64>, vertex: &Array2<f64>, scores: &ScoreTable) -> f64 {
    let (a, b) = segment_coefficients(current, vertex, scores);
    let t = best_step(a, b);
    b * t + a * t * t
}

/// A polytope vertex maximizing `<gradient, beta>`.
pub fn fw_linear_oracle(gradient: &Array2<f64>, cons: &ConstraintSet) -> Result<RelaxedAssignment> {
    cons.check_dims(gradient.nrows(), gradient.ncols())?;
    let mut lp = PolytopeLp::new(cons);
    lp.maximize(gradient)?;
    finish(lp.solution(), cons)
}

/// Moves along the optimal face of the linear subproblem while the exact
/// line-search gain of the candidate vertex improves.
fn refine_on_face(lp: PolytopeLp, current: &Array2<f64>, scores: &ScoreTable) -> Result<PolytopeLp> {
    let mut best = lp;
    let mut best_gain = segment_gain(current, &best.solution(), scores);
    for _ in 0..FACE_MOVES {
        let mut improved = None;
        for candidate in best.optimal_neighbours(FACE_NEIGHBOURS)? {
            let gain = segment_gain(current, &candidate.solution(), scores);
            if gain > best_gain + 1e-12 {
                best_gain = gain;
                improved = Some(candidate);
            }
        }
        match improved {
            Some(next) => best = next,
            None => break,
        }
    }
    Ok(best)
}

/// Runs Frank-Wolfe from `start` and records the objective after every step.
pub fn quad_relax_trace(
    scores: &ScoreTable,
    cons: &ConstraintSet,
    cfg: &FwConfig,
    start: &RelaxedAssignment,
) -> Result<FwTrace> {
    cfg.validate()?;
    cons.check_dims(scores.n(), scores.m())?;
    if start.beta.dim() != (scores.n(), scores.m()) || !start.is_feasible(cons) {
        return Err(AssignError::InvalidConfig("start point is not feasible".into()));
    }

    let mut beta = start.beta.clone();
    let mut value = relaxed_objective(&beta, scores)?;
    let mut objectives = vec![value];
    let mut gaps = Vec::new();
    let mut lp = PolytopeLp::new(cons);
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        let grad = gradient(&beta, scores);
        lp.maximize(&grad)?;
        if scores.g().is_some() {
            lp = refine_on_face(lp, &beta, scores)?;
        }
        let vertex = lp.solution();
        let gap = (&grad * &(&vertex - &beta)).sum();
        gaps.push(gap);
        if gap <= cfg.gap_tol * (1.0 + value.abs()) {
            converged = true;
            break;
        }
        let (a, b) = segment_coefficients(&beta, &vertex, scores);
        let t = best_step(a, b);
        if t == 0.0 {
            converged = true;
            break;
        }
        beta = &beta * (1.0 - t) + &(&vertex * t);
        value = relaxed_objective(&beta, scores)?;
        objectives.push(value);
    }

    let beta = finish(beta, cons)?;
    Ok(FwTrace { beta, objectives, gaps, converged })
}

/// Frank-Wolfe local maximum of the quadratic relaxation. A missing `g` is
/// treated as zero, which reduces the problem to the linear relaxation.
pub fn quad_relax_solve(
    scores: &ScoreTable,
    cons: &ConstraintSet,
    cfg: &FwConfig,
    start: &RelaxedAssignment,
) -> Result<RelaxedAssignment> {
    quad_relax_trace(scores, cons, cfg, start).map(|t| t.beta)
}
