use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::spec::{ResolvedScenario, UnitSpec};
use crate::BattleError;

/// Side of the square area positions are normalised by.
pub const ARENA: f64 = 64.0;
/// Slack on edge-to-edge distance when checking whether a target is reachable.
pub const CONTACT_EPS: f64 = 0.1;
const SIGMA_X: f64 = 1.0;
const TRUNCATE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Ours,
    Theirs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: usize,
    pub team: Team,
    pub spec: UnitSpec,
    pub pos: [f64; 2],
    pub velocity: [f64; 2],
    pub health: f64,
    pub cooldown: u32,
    /// Index into the opposing team.
    pub target: Option<usize>,
}

impl Unit {
    pub fn alive(&self) -> bool {
        self.health > 0.0
    }

    /// Edge-to-edge distance.
    pub fn gap(&self, other: &Unit) -> f64 {
        dist(self.pos, other.pos) - self.spec.stats.radius - other.spec.stats.radius
    }

    pub fn in_reach(&self, other: &Unit) -> bool {
        self.gap(other) <= self.spec.stats.range + CONTACT_EPS
    }
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattleConfig {
    pub scenario: ResolvedScenario,
    pub seed: u64,
    pub assignment_period: u32,
    pub opponent_order_period: u32,
    pub miss_probability: f64,
    pub frame_cap: u32,
}

impl BattleConfig {
    pub fn new(scenario: ResolvedScenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            assignment_period: 6,
            opponent_order_period: 60,
            miss_probability: 1.0 / 256.0,
            frame_cap: 2000,
        }
    }

    pub fn validate(&self) -> Result<(), BattleError> {
        if self.assignment_period == 0 || self.opponent_order_period == 0 || self.frame_cap == 0 {
            return Err(BattleError::Config("periods and frame cap must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.miss_probability) {
            return Err(BattleError::Config("miss probability must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BattleState {
    pub ours: Vec<Unit>,
    pub theirs: Vec<Unit>,
    pub frame: u32,
    /// Attack-move destination of the opponent.
    pub waypoint: [f64; 2],
    pub rng: ChaCha8Rng,
}

fn sigma_y(count: usize) -> f64 {
    1.5 + 0.15 * count as f64
}

fn truncated(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    loop {
        let v: f64 = normal.sample(rng);
        if v.abs() <= TRUNCATE * sigma {
            return v;
        }
    }
}

/// Distance between the two team anchors along x.
pub fn anchor_gap(s: &ResolvedScenario) -> f64 {
    s.max_range() + 2.0 * s.max_radius() + CONTACT_EPS + 2.0 * TRUNCATE * SIGMA_X + 1.0
}

pub fn spawn_battle(cfg: &BattleConfig) -> BattleState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = &cfg.scenario;
    let half = anchor_gap(s) / 2.0;
    let centre = ARENA / 2.0;
    let mut place = |specs: &[UnitSpec], team: Team, ax: f64| -> Vec<Unit> {
        let sy = sigma_y(specs.len());
        specs
            .iter()
            .enumerate()
            .map(|(id, spec)| {
                let x = ax + truncated(&mut rng, SIGMA_X);
                let y = centre + truncated(&mut rng, sy);
                Unit {
                    id,
                    team,
                    spec: spec.clone(),
                    pos: [x, y],
                    velocity: [0.0, 0.0],
                    health: spec.stats.max_health,
                    cooldown: 0,
                    target: None,
                }
            })
            .collect()
    };
    let ours = place(&s.ours, Team::Ours, centre - half);
    let theirs = place(&s.theirs, Team::Theirs, centre + half);
    let mut state = BattleState { ours, theirs, frame: 0, waypoint: [centre, centre], rng };
    state.waypoint = state.centroid(Team::Ours).unwrap_or(state.waypoint);
    state
}

impl BattleState {
    pub fn team(&self, t: Team) -> &[Unit] {
        match t {
            Team::Ours => &self.ours,
            Team::Theirs => &self.theirs,
        }
    }

    pub fn health(&self, t: Team) -> f64 {
        self.team(t).iter().map(|u| u.health).sum()
    }

    pub fn alive(&self, t: Team) -> usize {
        self.team(t).iter().filter(|u| u.alive()).count()
    }

    pub fn centroid(&self, t: Team) -> Option<[f64; 2]> {
        let alive: Vec<&Unit> = self.team(t).iter().filter(|u| u.alive()).collect();
        if alive.is_empty() {
            return None;
        }
        let k = alive.len() as f64;
        Some([
            alive.iter().map(|u| u.pos[0]).sum::<f64>() / k,
            alive.iter().map(|u| u.pos[1]).sum::<f64>() / k,
        ])
    }

    pub fn eliminated(&self) -> bool {
        self.alive(Team::Ours) == 0 || self.alive(Team::Theirs) == 0
    }

    pub fn outcome(&self) -> Outcome {
        match (self.alive(Team::Ours), self.alive(Team::Theirs)) {
            (a, 0) if a > 0 => Outcome::Win,
            (0, b) if b > 0 => Outcome::Loss,
            _ => Outcome::Draw,
        }
    }

    /// Advances one frame. `orders[i]` is our unit `i`'s target; dead targets idle.
    pub fn frame(&mut self, orders: &[Option<usize>], cfg: &BattleConfig) {
        if self.frame % cfg.opponent_order_period == 0 {
            if let Some(c) = self.centroid(Team::Ours) {
                self.waypoint = c;
            }
        }
        for u in self.ours.iter_mut().chain(self.theirs.iter_mut()).filter(|u| u.alive()) {
            u.cooldown = u.cooldown.saturating_sub(1);
        }

        // decisions are taken against the positions at the start of the frame
        let mut ours_targets = vec![None; self.ours.len()];
        for (i, _) in self.ours.iter().enumerate().filter(|(_, u)| u.alive()) {
            ours_targets[i] = orders.get(i).copied().flatten().filter(|&j| self.theirs[j].alive());
        }
        let mut theirs_targets = vec![None; self.theirs.len()];
        for (j, u) in self.theirs.iter().enumerate().filter(|(_, u)| u.alive()) {
            theirs_targets[j] = self
                .ours
                .iter()
                .enumerate()
                .filter(|(_, o)| o.alive() && u.in_reach(o))
                .min_by(|a, b| dist(u.pos, a.1.pos).total_cmp(&dist(u.pos, b.1.pos)).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i);
        }

        let mut disp_ours = vec![[0.0; 2]; self.ours.len()];
        let mut disp_theirs = vec![[0.0; 2]; self.theirs.len()];
        let mut dmg_ours = vec![0.0; self.ours.len()];
        let mut dmg_theirs = vec![0.0; self.theirs.len()];
        let miss = cfg.miss_probability;

        for i in 0..self.ours.len() {
            self.ours[i].target = ours_targets[i];
            if let Some(j) = ours_targets[i] {
                let (d, hit) = engage(&mut self.ours[i], &self.theirs[j], miss, &mut self.rng);
                disp_ours[i] = d;
                if let Some(h) = hit {
                    dmg_theirs[j] += h;
                }
            }
        }
        for j in 0..self.theirs.len() {
            if !self.theirs[j].alive() {
                continue;
            }
            self.theirs[j].target = theirs_targets[j];
            match theirs_targets[j] {
                Some(i) => {
                    let (d, hit) = engage(&mut self.theirs[j], &self.ours[i], miss, &mut self.rng);
                    disp_theirs[j] = d;
                    if let Some(h) = hit {
                        dmg_ours[i] += h;
                    }
                }
                None => disp_theirs[j] = toward(&self.theirs[j], self.waypoint, 0.0),
            }
        }

        let start: Vec<[f64; 2]> = self.ours.iter().chain(&self.theirs).map(|u| u.pos).collect();
        for (u, d) in self.ours.iter_mut().zip(&disp_ours).chain(self.theirs.iter_mut().zip(&disp_theirs)) {
            u.pos[0] += d[0];
            u.pos[1] += d[1];
        }
        self.separate();
        for (u, s) in self.ours.iter_mut().chain(self.theirs.iter_mut()).zip(start) {
            u.velocity = [u.pos[0] - s[0], u.pos[1] - s[1]];
        }

        for (u, d) in self.ours.iter_mut().zip(dmg_ours).chain(self.theirs.iter_mut().zip(dmg_theirs)) {
            if d > 0.0 {
                u.health = (u.health - d).max(0.0);
                if !u.alive() {
                    u.target = None;
                    u.velocity = [0.0, 0.0];
                }
            }
        }
        self.frame += 1;
    }

    /// Pushes overlapping living ground units apart, half the overlap each.
    fn separate(&mut self) {
        let mut units: Vec<&mut Unit> = self
            .ours
            .iter_mut()
            .chain(self.theirs.iter_mut())
            .filter(|u| u.alive() && !u.spec.stats.is_flying)
            .collect();
        for a in 0..units.len() {
            for b in a + 1..units.len() {
                let (left, right) = units.split_at_mut(b);
                let (ua, ub) = (&mut *left[a], &mut *right[0]);
                let reach = ua.spec.stats.radius + ub.spec.stats.radius;
                let d = dist(ua.pos, ub.pos);
                if d >= reach {
                    continue;
                }
                let dir = if d > 1e-12 {
                    [(ub.pos[0] - ua.pos[0]) / d, (ub.pos[1] - ua.pos[1]) / d]
                } else {
                    [0.0, 1.0]
                };
                let push = (reach - d) / 2.0;
                ua.pos[0] -= dir[0] * push;
                ua.pos[1] -= dir[1] * push;
                ub.pos[0] += dir[0] * push;
                ub.pos[1] += dir[1] * push;
            }
        }
    }
}

/// Step toward `goal` at unit speed, stopping `stop` short of it.
fn toward(u: &Unit, goal: [f64; 2], stop: f64) -> [f64; 2] {
    let d = dist(u.pos, goal);
    let step = u.spec.stats.speed.min(d - stop);
    if step <= 0.0 || d <= 1e-12 {
        return [0.0, 0.0];
    }
    [(goal[0] - u.pos[0]) / d * step, (goal[1] - u.pos[1]) / d * step]
}

/// Attack when in reach and ready, otherwise close in. Returns the move and the damage dealt.
fn engage(u: &mut Unit, target: &Unit, miss: f64, rng: &mut ChaCha8Rng) -> ([f64; 2], Option<f64>) {
    if u.in_reach(target) {
        if u.cooldown > 0 {
            return ([0.0, 0.0], None);
        }
        u.cooldown = u.spec.stats.cooldown_frames;
        let hit = miss == 0.0 || rng.random::<f64>() >= miss;
        return ([0.0, 0.0], hit.then_some(u.spec.stats.damage_per_attack));
    }
    let stop = u.spec.stats.radius + target.spec.stats.radius + u.spec.stats.range;
    (toward(u, target.pos, stop), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{default_catalog, Scenario};

    fn cfg(name: &str, seed: u64) -> BattleConfig {
        BattleConfig::new(Scenario::from_name(name).unwrap().resolve(&default_catalog()).unwrap(), seed)
    }

    #[test]
    fn spawn_is_reproducible_and_out_of_reach() {
        for name in ["m10v10", "w15v17", "zh10v12"] {
            for seed in 0..50 {
                let c = cfg(name, seed);
                let s = spawn_battle(&c);
                assert_eq!(s.ours, spawn_battle(&c).ours);
                for a in &s.ours {
                    for b in &s.theirs {
                        assert!(!a.in_reach(b) && !b.in_reach(a));
                    }
                }
            }
        }
    }

    #[test]
    fn attack_cadence_on_stationary_dummy() {
        let mut c = cfg("m1v1", 0);
        c.miss_probability = 0.0;
        let mut s = spawn_battle(&c);
        s.theirs[0].spec.stats.damage_per_attack = 0.0;
        s.theirs[0].spec.stats.speed = 1e-9;
        s.theirs[0].pos = s.ours[0].pos;
        s.theirs[0].pos[0] += 3.0;
        s.theirs[0].spec.stats.range = 0.0;
        let mut hits = Vec::new();
        let mut last = s.theirs[0].health;
        for f in 0..100 {
            s.frame(&[Some(0)], &c);
            if s.theirs[0].health < last {
                assert_eq!(last - s.theirs[0].health, last.min(6.0));
                hits.push(f);
                last = s.theirs[0].health;
            }
        }
        assert!(hits.len() >= 5);
        assert!(hits.windows(2).all(|w| w[1] - w[0] == 15), "{hits:?}");
    }

    #[test]
    fn flying_units_never_push() {
        let c = cfg("w5v5", 1);
        let mut s = spawn_battle(&c);
        for u in &mut s.ours {
            u.pos = [10.0, 10.0];
        }
        let before: Vec<_> = s.ours.iter().map(|u| u.pos).collect();
        s.separate();
        assert_eq!(before, s.ours.iter().map(|u| u.pos).collect::<Vec<_>>());
    }

    #[test]
    fn ground_units_are_pushed_apart() {
        let c = cfg("m2v1", 1);
        let mut s = spawn_battle(&c);
        s.ours[0].pos = [10.0, 10.0];
        s.ours[1].pos = [10.2, 10.0];
        s.separate();
        assert!((dist(s.ours[0].pos, s.ours[1].pos) - 0.8).abs() < 1e-12);
    }
}
