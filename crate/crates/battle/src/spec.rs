use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::BattleError;

const DEFAULT_UNITS: &str = include_str!("../data/units.json");

/// Unit statistics as written in a catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStats {
    pub max_health: f64,
    pub damage_per_attack: f64,
    pub cooldown_frames: u32,
    /// Edge-to-edge weapon reach; 0 for melee.
    pub range: f64,
    /// Distance per frame.
    pub speed: f64,
    pub radius: f64,
    pub is_flying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub name: String,
    #[serde(flatten)]
    pub stats: UnitStats,
    /// Index of this unit type within its scenario.
    pub type_id: usize,
}

pub type UnitCatalog = BTreeMap<String, UnitStats>;

pub fn default_catalog() -> UnitCatalog {
    serde_json::from_str(DEFAULT_UNITS).expect("bundled unit catalog parses")
}

pub fn parse_catalog(text: &str) -> Result<UnitCatalog, BattleError> {
    let cat: UnitCatalog = serde_json::from_str(text).map_err(|e| BattleError::Config(format!("unit catalog: {e}")))?;
    for (name, s) in &cat {
        let positive = s.max_health > 0.0 && s.damage_per_attack > 0.0 && s.cooldown_frames > 0;
        let finite = [s.max_health, s.damage_per_attack, s.range, s.speed, s.radius].iter().all(|v| v.is_finite());
        if !positive || !finite || s.range < 0.0 || s.speed <= 0.0 || s.radius <= 0.0 {
            return Err(BattleError::Config(format!("unit {name} has invalid statistics")));
        }
    }
    Ok(cat)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub unit: String,
    pub count: usize,
}

/// Team compositions referencing named unit types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub ours: Vec<Group>,
    pub theirs: Vec<Group>,
}

impl Scenario {
    /// `m10v10`, `w15v17` or `zh10v12` (that many zerglings and hydralisks per side).
    pub fn from_name(name: &str) -> Result<Self, BattleError> {
        let bad = || BattleError::Config(format!("unrecognised scenario name {name:?}"));
        let (prefix, rest) = name
            .find(|c: char| c.is_ascii_digit())
            .map(|k| name.split_at(k))
            .ok_or_else(bad)?;
        let (a, b) = rest.split_once('v').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if a == 0 || b == 0 {
            return Err(bad());
        }
        let team = |k: usize, units: &[&str]| units.iter().map(|u| Group { unit: u.to_string(), count: k }).collect();
        let units: &[&str] = match prefix {
            "m" => &["marine"],
            "w" => &["wraith"],
            "zh" => &["zergling", "hydralisk"],
            _ => return Err(bad()),
        };
        Ok(Self { name: name.to_string(), ours: team(a, units), theirs: team(b, units) })
    }

    pub fn from_json(text: &str) -> Result<Self, BattleError> {
        serde_json::from_str(text).map_err(|e| BattleError::Config(format!("scenario: {e}")))
    }

    /// Distinct unit names in order of first appearance.
    pub fn type_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for g in self.ours.iter().chain(&self.theirs) {
            if !names.contains(&g.unit) {
                names.push(g.unit.clone());
            }
        }
        names
    }

    pub fn resolve(&self, catalog: &UnitCatalog) -> Result<ResolvedScenario, BattleError> {
        let types = self.type_names();
        let expand = |groups: &[Group]| -> Result<Vec<UnitSpec>, BattleError> {
            let mut out = Vec::new();
            for g in groups {
                let stats = catalog
                    .get(&g.unit)
                    .ok_or_else(|| BattleError::Config(format!("unknown unit type {}", g.unit)))?;
                let type_id = types.iter().position(|t| *t == g.unit).expect("listed");
                out.extend((0..g.count).map(|_| UnitSpec { name: g.unit.clone(), stats: stats.clone(), type_id }));
            }
            Ok(out)
        };
        let (ours, theirs) = (expand(&self.ours)?, expand(&self.theirs)?);
        if ours.is_empty() || theirs.is_empty() {
            return Err(BattleError::Config("each team needs at least one unit".into()));
        }
        Ok(ResolvedScenario { name: self.name.clone(), ours, theirs, types })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedScenario {
    pub name: String,
    pub ours: Vec<UnitSpec>,
    pub theirs: Vec<UnitSpec>,
    pub types: Vec<String>,
}

impl ResolvedScenario {
    pub fn max_range(&self) -> f64 {
        self.ours.iter().chain(&self.theirs).map(|u| u.stats.range).fold(0.0, f64::max)
    }

    pub fn max_radius(&self) -> f64 {
        self.ours.iter().chain(&self.theirs).map(|u| u.stats.radius).fold(0.0, f64::max)
    }

    pub fn max_speed(&self) -> f64 {
        self.ours.iter().chain(&self.theirs).map(|u| u.stats.speed).fold(0.0, f64::max)
    }
}
