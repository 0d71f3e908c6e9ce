use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use swarmplan_core::Assignment;

use crate::sim::{dist, BattleState, Team};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    /// Closest enemy.
    C,
    /// Everyone on the weakest enemy.
    Wc,
    /// Weakest first, no more damage than needed.
    Wcnok,
    /// As `Wcnok`, but keep a target until it dies.
    Wcnoknc,
    /// As `Wcnoknc`, but drop a kept target that would be over-killed.
    Wcnoks,
    /// Random target kept until it dies.
    RandNc,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 6] = [Self::C, Self::Wc, Self::Wcnok, Self::Wcnoknc, Self::Wcnoks, Self::RandNc];

    pub fn name(self) -> &'static str {
        match self {
            Self::C => "c",
            Self::Wc => "wc",
            Self::Wcnok => "wcnok",
            Self::Wcnoknc => "wcnoknc",
            Self::Wcnoks => "wcnoks",
            Self::RandNc => "rand_nc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || (s == "rand-nc" && *k == Self::RandNc))
    }
}

/// Alive enemies ordered weakest first, then by distance to our centroid, then id.
pub fn weakest_closest_order(state: &BattleState) -> Vec<usize> {
    let centre = state.centroid(Team::Ours).unwrap_or([0.0, 0.0]);
    let mut order: Vec<usize> = (0..state.theirs.len()).filter(|&j| state.theirs[j].alive()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&state.theirs[a], &state.theirs[b]);
        ea.health
            .total_cmp(&eb.health)
            .then(dist(centre, ea.pos).total_cmp(&dist(centre, eb.pos)))
            .then(a.cmp(&b))
    });
    order
}

/// Fills free units (in id order) onto enemies in weakest-closest order while the
/// damage already committed to the enemy is below its health.
pub fn no_overkill_fill(state: &BattleState, free: &[usize], committed: &mut [f64], targets: &mut [Option<usize>]) {
    let mut free = free.iter().copied().peekable();
    for j in weakest_closest_order(state) {
        while committed[j] < state.theirs[j].health {
            let Some(i) = free.next() else { return };
            targets[i] = Some(j);
            committed[j] += state.ours[i].spec.stats.damage_per_attack;
        }
        if free.peek().is_none() {
            return;
        }
    }
}

/// Scripted target selection with the memory the persistent variants need.
#[derive(Debug, Clone)]
pub struct Heuristic {
    pub kind: HeuristicKind,
    rng: ChaCha8Rng,
    prev: Vec<Option<usize>>,
}

impl Heuristic {
    pub fn new(kind: HeuristicKind, seed: u64) -> Self {
        Self { kind, rng: ChaCha8Rng::seed_from_u64(seed), prev: Vec::new() }
    }

    pub fn act(&mut self, state: &BattleState) -> Assignment {
        let (n, m) = (state.ours.len(), state.theirs.len());
        self.prev.resize(n, None);
        let alive: Vec<usize> = (0..n).filter(|&i| state.ours[i].alive()).collect();
        let mut targets = vec![None; n];
        let keeps = |prev: &[Option<usize>], i: usize| prev[i].filter(|&j| state.theirs[j].alive());

        match self.kind {
            HeuristicKind::C => {
                for &i in &alive {
                    let me = state.ours[i].pos;
                    targets[i] = (0..m)
                        .filter(|&j| state.theirs[j].alive())
                        .min_by(|&a, &b| {
                            dist(me, state.theirs[a].pos).total_cmp(&dist(me, state.theirs[b].pos)).then(a.cmp(&b))
                        });
                }
            }
            HeuristicKind::Wc => {
                let weakest = weakest_closest_order(state).first().copied();
                for &i in &alive {
                    targets[i] = weakest;
                }
            }
            HeuristicKind::Wcnok => {
                no_overkill_fill(state, &alive, &mut vec![0.0; m], &mut targets);
            }
            HeuristicKind::Wcnoknc | HeuristicKind::Wcnoks => {
                let mut committed = vec![0.0; m];
                let mut free = Vec::new();
                for &i in &alive {
                    match keeps(&self.prev, i) {
                        Some(j) if self.kind == HeuristicKind::Wcnoknc || committed[j] < state.theirs[j].health => {
                            targets[i] = Some(j);
                            committed[j] += state.ours[i].spec.stats.damage_per_attack;
                        }
                        _ => free.push(i),
                    }
                }
                no_overkill_fill(state, &free, &mut committed, &mut targets);
            }
            HeuristicKind::RandNc => {
                let live: Vec<usize> = (0..m).filter(|&j| state.theirs[j].alive()).collect();
                for &i in &alive {
                    targets[i] = keeps(&self.prev, i)
                        .or_else(|| (!live.is_empty()).then(|| live[self.rng.random_range(0..live.len())]));
                }
            }
        }
        self.prev = targets.clone();
        Assignment { targets }
    }
}
