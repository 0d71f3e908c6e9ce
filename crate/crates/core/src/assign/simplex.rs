//! Primal simplex specialised to the relaxed assignment polytope
//!
//! ```text
//! max <c, beta>  s.t.  sum_j beta_ij <= 1          (agent rows)
//!                      sum_i mu_ij beta_ij <= u_j  (capacity rows)
//!                      beta >= 0
//! ```
//!
//! The right-hand side is nonnegative, so the all-slack basis is feasible and
//! no phase one is needed. Every structural column has at most two nonzeros
//! (its agent row and its task row), which keeps pricing at O(nm) per pivot;
//! the basis inverse itself is dense, `(n + m)^2`.
//!
//! Pricing is Dantzig's largest reduced cost. After a run of degenerate pivots
//! the solver switches to Bland's lowest-index rule until the objective moves
//! again, which rules out cycling.

use ndarray::Array2;

use super::{AssignError, ConstraintSet, RelaxedAssignment, Result, ScoreTable};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 50;
const REFACTOR_EVERY: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct PolytopeLp {
    n: usize,
    m: usize,
    rows: usize,
    /// `mu_ij` for structural column `i * m + j`; its other entry is a 1 in row `i`.
    mu: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    reduced_tol: f64,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    pub(crate) pivots: usize,
}

impl PolytopeLp {
    pub(crate) fn new(cons: &ConstraintSet) -> Self {
        let (n, m) = (cons.n(), cons.m());
        let rows = n + m;
        let structural = n * m;
        let mut rhs = vec![1.0; n];
        rhs.extend(cons.u().iter().copied());
        let mut binv = vec![0.0; rows * rows];
        for r in 0..rows {
            binv[r * rows + r] = 1.0;
        }
        let mut position = vec![None; structural + rows];
        for r in 0..rows {
            position[structural + r] = Some(r);
        }
        Self {
            n,
            m,
            rows,
            mu: cons.mu().iter().copied().collect(),
            xb: rhs.clone(),
            rhs,
            cost: vec![0.0; structural],
            reduced_tol: 1e-9,
            basis: (structural..structural + rows).collect(),
            position,
            binv,
            since_refactor: 0,
            pivots: 0,
        }
    }

    fn structural(&self) -> usize {
        self.n * self.m
    }

    fn num_vars(&self) -> usize {
        self.structural() + self.rows
    }

    fn var_cost(&self, k: usize) -> f64 {
        if k < self.structural() {
            self.cost[k]
        } else {
            0.0
        }
    }

    /// Sparse column of variable `k` as (row, coefficient) pairs.
    fn column(&self, k: usize) -> ([(usize, f64); 2], usize) {
        let s = self.structural();
        if k < s {
            let (i, j) = (k / self.m, k % self.m);
            ([(i, 1.0), (self.n + j, self.mu[k])], 2)
        } else {
            ([(k - s, 1.0), (0, 0.0)], 1)
        }
    }

    fn duals(&self) -> Vec<f64> {
        let r = self.rows;
        let mut y = vec![0.0; r];
        for (p, &var) in self.basis.iter().enumerate() {
            let c = self.var_cost(var);
            if c != 0.0 {
                let row = &self.binv[p * r..(p + 1) * r];
                for (yq, &b) in y.iter_mut().zip(row) {
                    *yq += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, k: usize, y: &[f64]) -> f64 {
        let (entries, len) = self.column(k);
        let mut d = self.var_cost(k);
        for &(row, a) in &entries[..len] {
            d -= y[row] * a;
        }
        d
    }

    fn alpha(&self, k: usize) -> Vec<f64> {
        let r = self.rows;
        let (entries, len) = self.column(k);
        (0..r)
            .map(|p| {
                entries[..len]
                    .iter()
                    .map(|&(row, a)| self.binv[p * r + row] * a)
                    .sum()
            })
            .collect()
    }

    /// Minimum-ratio row for entering column `alpha`; ties go to the lowest basic index.
    fn ratio_test(&self, alpha: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (p, &a) in alpha.iter().enumerate() {
            if a <= PIVOT_TOL {
                continue;
            }
            let theta = self.xb[p].max(0.0) / a;
            best = match best {
                None => Some((p, theta)),
                Some((bp, bt)) => {
                    if theta < bt - RATIO_TIE
                        || (theta <= bt + RATIO_TIE && self.basis[p] < self.basis[bp])
                    {
                        Some((p, theta))
                    } else {
                        Some((bp, bt))
                    }
                }
            };
        }
        best
    }

    fn pivot(&mut self, p: usize, k: usize, alpha: &[f64]) -> Result<()> {
        let r = self.rows;
        let piv = alpha[p];
        for v in &mut self.binv[p * r..(p + 1) * r] {
            *v /= piv;
        }
        self.xb[p] /= piv;
        let pivot_row: Vec<f64> = self.binv[p * r..(p + 1) * r].to_vec();
        let xp = self.xb[p];
        for q in 0..r {
            if q == p || alpha[q] == 0.0 {
                continue;
            }
            let f = alpha[q];
            for (v, &pr) in self.binv[q * r..(q + 1) * r].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.xb[q] -= f * xp;
        }
        let leaving = self.basis[p];
        self.position[leaving] = None;
        self.position[k] = Some(p);
        self.basis[p] = k;
        self.pivots += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Rebuilds the basis inverse from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<()> {
        let r = self.rows;
        let mut b = vec![0.0; r * r];
        for (p, &var) in self.basis.iter().enumerate() {
            let (entries, len) = self.column(var);
            for &(row, a) in &entries[..len] {
                b[row * r + p] += a;
            }
        }
        let mut inv = vec![0.0; r * r];
        for i in 0..r {
            inv[i * r + i] = 1.0;
        }
        for col in 0..r {
            let (piv_row, piv_val) = (col..r)
                .map(|q| (q, b[q * r + col]))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .expect("nonempty range");
            if piv_val.abs() < 1e-12 {
                return Err(AssignError::SolverFailure("singular basis".into()));
            }
            if piv_row != col {
                for c in 0..r {
                    b.swap(col * r + c, piv_row * r + c);
                    inv.swap(col * r + c, piv_row * r + c);
                }
            }
            let d = b[col * r + col];
            for c in 0..r {
                b[col * r + c] /= d;
                inv[col * r + c] /= d;
            }
            for q in 0..r {
                if q == col {
                    continue;
                }
                let f = b[q * r + col];
                if f == 0.0 {
                    continue;
                }
                for c in 0..r {
                    b[q * r + c] -= f * b[col * r + c];
                    inv[q * r + c] -= f * inv[col * r + c];
                }
            }
        }
        self.binv = inv;
        for p in 0..r {
            let row = &self.binv[p * r..(p + 1) * r];
            let v: f64 = row.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
            self.xb[p] = if v.abs() < 1e-12 { 0.0 } else { v };
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Maximizes `<cost, beta>` starting from the current (feasible) basis.
    pub(crate) fn maximize(&mut self, cost: &Array2<f64>) -> Result<()> {
        if cost.dim() != (self.n, self.m) {
            return Err(AssignError::DimensionMismatch(format!(
                "objective is {:?}, polytope is ({}, {})",
                cost.dim(),
                self.n,
                self.m
            )));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(AssignError::NonFinite("objective"));
        }
        self.cost = cost.iter().copied().collect();
        let scale = self.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        self.reduced_tol = 1e-9 * scale;

        let budget = 50 * self.num_vars() + 1000;
        let mut streak = 0usize;
        let mut bland = false;
        for _ in 0..budget {
            let y = self.duals();
            let mut entering: Option<(usize, f64)> = None;
            for k in 0..self.num_vars() {
                if self.position[k].is_some() {
                    continue;
                }
                let d = self.reduced_cost(k, &y);
                if d <= self.reduced_tol {
                    continue;
                }
                if bland {
                    entering = Some((k, d));
                    break;
                }
                if entering.map_or(true, |(_, bd)| d > bd) {
                    entering = Some((k, d));
                }
            }
            let Some((k, _)) = entering else {
                return Ok(());
            };
            let alpha = self.alpha(k);
            let Some((p, theta)) = self.ratio_test(&alpha) else {
                return Err(AssignError::SolverFailure("unbounded direction".into()));
            };
            if theta <= RATIO_TIE {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(p, k, &alpha)?;
        }
        Err(AssignError::SolverFailure(format!(
            "no optimum after {budget} pivots"
        )))
    }

    /// The structural part of the current basic solution.
    pub(crate) fn solution(&self) -> Array2<f64> {
        let mut beta = Array2::zeros((self.n, self.m));
        for (p, &var) in self.basis.iter().enumerate() {
            if var < self.structural() {
                beta[[var / self.m, var % self.m]] = self.xb[p].max(0.0);
            }
        }
        beta
    }

    /// Dual prices of the current basis, agent rows first.
    #[cfg(test)]
    pub(crate) fn dual_prices(&self) -> Vec<f64> {
        self.duals()
    }

    /// Adjacent vertices that keep the current objective optimal.
    ///
    /// Each returned solver state sits one non-degenerate pivot away along a
    /// nonbasic column whose reduced cost is zero, i.e. another vertex of the
    /// optimal face. At most `limit` states are produced.
    pub(crate) fn optimal_neighbours(&self, limit: usize) -> Result<Vec<PolytopeLp>> {
        let y = self.duals();
        let mut out = Vec::new();
        for k in 0..self.num_vars() {
            if out.len() >= limit {
                break;
            }
            if self.position[k].is_some() {
                continue;
            }
            let d = self.reduced_cost(k, &y);
            if d.abs() > self.reduced_tol {
                continue;
            }
            let alpha = self.alpha(k);
            let Some((p, theta)) = self.ratio_test(&alpha) else {
                continue;
            };
            if theta <= RATIO_TIE {
                continue;
            }
            let mut next = self.clone();
            next.pivot(p, k, &alpha)?;
            out.push(next);
        }
        Ok(out)
    }
}

/// Checks and tidies a solver output; an infeasible result is a solver failure.
pub(crate) fn finish(beta: Array2<f64>, cons: &ConstraintSet) -> Result<RelaxedAssignment> {
    let relaxed = RelaxedAssignment { beta }.cleaned();
    if relaxed.is_feasible(cons) {
        Ok(relaxed)
    } else {
        Err(AssignError::SolverFailure(
            "solver returned a point outside the polytope".into(),
        ))
    }
}

/// Solves the linear relaxation `max sum beta_ij h_ij` over the assignment polytope.
///
/// `g` is ignored. The returned point is a vertex of the polytope.
pub fn lp_relax_solve(scores: &ScoreTable, cons: &ConstraintSet) -> Result<RelaxedAssignment> {
    cons.check_dims(scores.n(), scores.m())?;
    let mut lp = PolytopeLp::new(cons);
    lp.maximize(scores.h())?;
    finish(lp.solution(), cons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{amax_assign, brute_force_assign, objective_value, relaxed_objective};
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp_value(beta: &Array2<f64>, h: &Array2<f64>) -> f64 {
        (beta * h).sum()
    }

    #[test]
    fn capacity_one_keeps_best_agent() {
        let s = ScoreTable::linear(array![[1.0], [2.0]]).unwrap();
        let c = ConstraintSet::uniform(2, 1, 1.0).unwrap();
        let r = lp_relax_solve(&s, &c).unwrap();
        assert_eq!(r.beta, array![[0.0], [1.0]]);
    }

    #[test]
    fn capacity_forces_swap() {
        let s = ScoreTable::linear(array![[5.0, 4.0], [5.0, 0.0]]).unwrap();
        let c = ConstraintSet::uniform(2, 2, 1.0).unwrap();
        let r = lp_relax_solve(&s, &c).unwrap();
        assert_eq!(r.beta, array![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(lp_value(&r.beta, s.h()), 9.0);
    }

    #[test]
    fn inactive_constraints_reduce_to_amax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (n, m) = (rng.random_range(1..6), rng.random_range(1..6));
            let h = Array2::from_shape_fn((n, m), |_| rng.random_range(0.1..3.0));
            let s = ScoreTable::linear(h).unwrap();
            let c = ConstraintSet::uniform(n, m, n as f64).unwrap();
            let r = lp_relax_solve(&s, &c).unwrap();
            let amax = objective_value(&amax_assign(&s), &s).unwrap();
            assert!((lp_value(&r.beta, s.h()) - amax).abs() < 1e-9);
        }
    }

    #[test]
    fn relaxation_dominates_integer_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (n, m) = (rng.random_range(1..5), rng.random_range(1..5));
            let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..3.0));
            let mu = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..4.0));
            let u = Array1::from_shape_fn(m, |_| rng.random_range(0.0..6.0));
            let s = ScoreTable::linear(h).unwrap();
            let c = ConstraintSet::new(mu, u).unwrap();
            let r = lp_relax_solve(&s, &c).unwrap();
            assert!(r.is_feasible(&c));
            let best = brute_force_assign(&s, &c).unwrap();
            let ilp = objective_value(&best, &s).unwrap();
            assert!(relaxed_objective(&r.beta, &s).unwrap() >= ilp - 1e-6);
        }
    }

    /// Weak duality: any `y >= 0` with `A^T y >= c` bounds the primal from above,
    /// so a matching dual certifies the primal optimum.
    #[test]
    fn optimum_is_certified_by_duals() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let (n, m) = (rng.random_range(1..7), rng.random_range(1..7));
            let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-2.0..5.0));
            let mu = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..3.0));
            let u = Array1::from_shape_fn(m, |_| rng.random_range(0.0..4.0));
            let c = ConstraintSet::new(mu.clone(), u.clone()).unwrap();
            let mut lp = PolytopeLp::new(&c);
            lp.maximize(&h).unwrap();
            let y = lp.dual_prices();
            assert!(y.iter().all(|&v| v >= -1e-9), "negative dual {y:?}");
            for i in 0..n {
                for j in 0..m {
                    assert!(y[i] + mu[[i, j]] * y[n + j] >= h[[i, j]] - 1e-9);
                }
            }
            let dual: f64 = y[..n].iter().sum::<f64>()
                + y[n..].iter().zip(u.iter()).map(|(a, b)| a * b).sum::<f64>();
            let primal = lp_value(&lp.solution(), &h);
            assert!((dual - primal).abs() < 1e-6, "gap {primal} vs {dual}");
        }
    }

    #[test]
    fn medium_instance_is_feasible_and_fast_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (n, m) = (40, 42);
        let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0));
        let mu = Array2::from_shape_fn((n, m), |_| rng.random_range(1.0..10.0));
        let u = Array1::from_shape_fn(m, |_| rng.random_range(5.0..40.0));
        let c = ConstraintSet::new(mu, u).unwrap();
        let s = ScoreTable::linear(h).unwrap();
        let r = lp_relax_solve(&s, &c).unwrap();
        assert!(r.is_feasible(&c));
    }
}
