use serde::{Deserialize, Serialize};
use swarmplan_core::Assignment;
use thiserror::Error;

use crate::env::GridState;
use crate::grid::{chebyshev, Cell};

pub const MAX_DP_VICTIMS: usize = 20;
pub const MAX_MVR_AMBULANCES: usize = 8;
pub const MAX_MVR_VICTIMS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} = {got} exceeds the supported maximum of {max}")]
    TooLarge { what: &'static str, got: usize, max: usize },
}

/// Each ambulance heads for its nearest victim still waiting, lowest index on ties.
pub fn closest_baseline(state: &GridState) -> Assignment {
    let targets = state
        .ambulances
        .iter()
        .map(|&a| {
            state
                .victims
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.picked_up)
                .min_by_key(|&(j, v)| (chebyshev(a, v.cell), j))
                .map(|(j, _)| j)
        })
        .collect();
    Assignment { targets }
}

const INF: u32 = u32::MAX / 4;

/// `len(S, v)`: shortest open tour through every victim of subset `S`, starting at `v`.
#[derive(Debug, Clone)]
pub struct SubsetPathTable {
    m: usize,
    len: Vec<u32>,
    dist: Vec<u32>,
}

impl SubsetPathTable {
    pub fn m(&self) -> usize {
        self.m
    }

    /// `None` when `start` is not in `subset`.
    pub fn get(&self, subset: usize, start: usize) -> Option<u32> {
        let v = self.len[subset * self.m + start];
        (v < INF).then_some(v)
    }

    pub fn dist(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.m + b]
    }

    /// Visiting order that achieves `get(subset, start)`.
    pub fn tour(&self, mut subset: usize, start: usize) -> Vec<usize> {
        let mut order = vec![start];
        let mut at = start;
        subset &= !(1 << at);
        while subset != 0 {
            let here = self.len[(subset | 1 << at) * self.m + at];
            let next = (0..self.m)
                .filter(|&w| subset >> w & 1 == 1)
                .find(|&w| self.dist(at, w) + self.len[subset * self.m + w] == here)
                .expect("table is consistent");
            order.push(next);
            subset &= !(1 << next);
            at = next;
        }
        order
    }
}

/// Held-Karp recursion over subsets with Chebyshev distances.
pub fn dp_subset_paths(victims: &[Cell]) -> Result<SubsetPathTable, OracleError> {
    let m = victims.len();
    if m > MAX_DP_VICTIMS {
        return Err(OracleError::TooLarge { what: "victims", got: m, max: MAX_DP_VICTIMS });
    }
    let mut dist = vec![0; m * m];
    for a in 0..m {
        for b in 0..m {
            dist[a * m + b] = chebyshev(victims[a], victims[b]);
        }
    }
    let mut len = vec![INF; (1usize << m) * m];
    for v in 0..m {
        len[(1 << v) * m + v] = 0;
    }
    for s in 1usize..1 << m {
        if s.is_power_of_two() {
            continue;
        }
        for v in (0..m).filter(|&v| s >> v & 1 == 1) {
            let rest = s & !(1 << v);
            let best = (0..m)
                .filter(|&w| rest >> w & 1 == 1)
                .map(|w| dist[v * m + w] + len[rest * m + w])
                .min()
                .expect("rest is nonempty");
            len[s * m + v] = best;
        }
    }
    Ok(SubsetPathTable { m, len, dist })
}

/// Per-ambulance victim order and the time the last victim is reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub routes: Vec<Vec<usize>>,
    pub makespan: u32,
}

impl RoutePlan {
    /// Each ambulance targets the first victim on its route still waiting.
    pub fn assignment(&self, state: &GridState) -> Assignment {
        let targets = self
            .routes
            .iter()
            .map(|r| r.iter().copied().find(|&j| !state.victims[j].picked_up))
            .collect();
        Assignment { targets }
    }

    /// Per-ambulance completion times recomputed from positions.
    pub fn route_times(&self, state: &GridState) -> Vec<u32> {
        self.routes
            .iter()
            .zip(&state.ambulances)
            .map(|(r, &a)| match r.first() {
                None => 0,
                Some(&j0) => {
                    let mut t = first_leg(a, state.victims[j0].cell);
                    for w in r.windows(2) {
                        t += chebyshev(state.victims[w[0]].cell, state.victims[w[1]].cell);
                    }
                    t
                }
            })
            .collect()
    }
}

/// Pickups happen after a move, so even a victim under the ambulance costs one step.
fn first_leg(from: Cell, to: Cell) -> u32 {
    chebyshev(from, to).max(1)
}

struct Search<'a> {
    n: usize,
    order: Vec<usize>,
    /// `cost[k][S]`: ambulance `k` serving subset `S` (bitmask over all victims).
    cost: &'a [Vec<u32>],
    sets: Vec<usize>,
    /// Lowest-index ambulance sharing this one's start cell.
    twin: Vec<Option<usize>>,
    best: u32,
    best_sets: Vec<usize>,
}

impl Search<'_> {
    fn bound(&self, depth: usize, current: u32) -> u32 {
        let mut lb = current;
        for &x in &self.order[depth..] {
            let cheapest = (0..self.n)
                .map(|k| self.cost[k][self.sets[k] | 1 << x])
                .min()
                .expect("n >= 1");
            lb = lb.max(cheapest);
        }
        lb
    }

    fn go(&mut self, depth: usize, current: u32) {
        if depth == self.order.len() {
            if current < self.best {
                self.best = current;
                self.best_sets = self.sets.clone();
            }
            return;
        }
        if self.bound(depth, current) >= self.best {
            return;
        }
        let x = self.order[depth];
        let mut options: Vec<(u32, usize)> = (0..self.n)
            .map(|k| (self.cost[k][self.sets[k] | 1 << x], k))
            .collect();
        options.sort_unstable();
        for (c, k) in options {
            let next = current.max(c);
            if next >= self.best {
                break;
            }
            // idle ambulances on the same cell are interchangeable
            if self.sets[k] == 0 && self.twin[k].is_some_and(|o| self.sets[o] == 0) {
                continue;
            }
            self.sets[k] |= 1 << x;
            self.go(depth + 1, next);
            self.sets[k] &= !(1 << x);
        }
    }
}

/// Minimum-makespan split of the waiting victims among ambulances.
pub fn mvr_exact(state: &GridState) -> Result<RoutePlan, OracleError> {
    let n = state.ambulances.len();
    if n > MAX_MVR_AMBULANCES {
        return Err(OracleError::TooLarge { what: "ambulances", got: n, max: MAX_MVR_AMBULANCES });
    }
    let waiting: Vec<usize> = (0..state.victims.len()).filter(|&j| !state.victims[j].picked_up).collect();
    let m = waiting.len();
    if m > MAX_MVR_VICTIMS {
        return Err(OracleError::TooLarge { what: "victims", got: m, max: MAX_MVR_VICTIMS });
    }
    if m == 0 {
        return Ok(RoutePlan { routes: vec![Vec::new(); n], makespan: 0 });
    }
    let cells: Vec<Cell> = waiting.iter().map(|&j| state.victims[j].cell).collect();
    let table = dp_subset_paths(&cells)?;

    let full = (1usize << m) - 1;
    let mut cost = vec![vec![0u32; 1 << m]; n];
    let mut first = vec![vec![0usize; 1 << m]; n];
    for (k, &a) in state.ambulances.iter().enumerate() {
        for s in 1..=full {
            let (c, v) = (0..m)
                .filter(|&v| s >> v & 1 == 1)
                .map(|v| (first_leg(a, cells[v]) + table.get(s, v).expect("v in s"), v))
                .min()
                .expect("s nonempty");
            cost[k][s] = c;
            first[k][s] = v;
        }
    }

    // hardest victims first: the ones far from every ambulance
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&x| std::cmp::Reverse((0..n).map(|k| cost[k][1 << x]).min().unwrap_or(0)));

    // incumbent: give each victim to the ambulance that keeps the makespan lowest
    let mut sets = vec![0usize; n];
    let mut incumbent = 0;
    for &x in &order {
        let k = (0..n).min_by_key(|&k| (cost[k][sets[k] | 1 << x], k)).expect("n >= 1");
        sets[k] |= 1 << x;
        incumbent = incumbent.max(cost[k][sets[k]]);
    }

    let mut search = Search {
        n,
        order,
        cost: &cost,
        sets: vec![0; n],
        twin: (0..n)
            .map(|k| (0..k).find(|&o| state.ambulances[o] == state.ambulances[k]))
            .collect(),
        best: incumbent,
        best_sets: sets,
    };
    search.go(0, 0);

    let routes = search
        .best_sets
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            if s == 0 {
                Vec::new()
            } else {
                table.tour(s, first[k][s]).into_iter().map(|v| waiting[v]).collect()
            }
        })
        .collect();
    Ok(RoutePlan { routes, makespan: search.best })
}
