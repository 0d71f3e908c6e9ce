use super::{AssignError, Assignment, ConstraintSet, RelaxedAssignment, Result, ScoreTable};

/// Relaxed mass at or below this is treated as zero.
const ZERO_MASS: f64 = 1e-9;

/// Greedy rounding of a relaxed assignment.
///
/// Agents are visited once, in descending order of their largest relaxed
/// entry (lower index first on ties). Each takes the unsaturated task with the
/// largest relaxed value, preferring higher `h` and then lower task index on
/// ties. A task is saturated for agent `i` when adding `mu_ij` would push its
/// load above `u_j`.
pub fn greedy_round(
    relaxed: &RelaxedAssignment,
    scores: &ScoreTable,
    cons: &ConstraintSet,
) -> Result<Assignment> {
    let (n, m) = relaxed.beta.dim();
    if (n, m) != (scores.n(), scores.m()) {
        return Err(AssignError::DimensionMismatch(format!(
            "relaxed is {:?}, scores are ({}, {})",
            relaxed.beta.dim(),
            scores.n(),
            scores.m()
        )));
    }
    cons.check_dims(n, m)?;
    let beta = &relaxed.beta;
    let h = scores.h();

    let row_max: Vec<f64> = beta
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| row_max[b].total_cmp(&row_max[a]).then(a.cmp(&b)));

    let mut load = vec![0.0; m];
    let mut out = Assignment::unassigned(n);
    for i in order {
        if row_max[i] <= ZERO_MASS {
            continue;
        }
        let mut pick: Option<usize> = None;
        for j in 0..m {
            if load[j] + cons.mu()[[i, j]] > cons.u()[j] {
                continue;
            }
            pick = match pick {
                None => Some(j),
                Some(p) => {
                    let better = beta[[i, j]] > beta[[i, p]]
                        || (beta[[i, j]] == beta[[i, p]] && h[[i, j]] > h[[i, p]]);
                    Some(if better { j } else { p })
                }
            };
        }
        if let Some(j) = pick {
            load[j] += cons.mu()[[i, j]];
            out.targets[i] = Some(j);
        }
    }
    Ok(out)
}
