//! Scenario descriptors: map size, unit stat blocks and team compositions.
//!
//! Descriptors are TOML documents. Unit types are declared once under
//! `[[unit_types]]` and referenced by name from the `[[allies]]` and
//! `[[enemies]]` squads.

use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario descriptor {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario descriptor: {0}")]
    Parse(String),
    #[error("invalid scenario: `{key}` {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Combat stats shared by every unit of one type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTypeSpec {
    pub type_id: u32,
    pub max_hitpoints: f64,
    pub max_shield: f64,
    pub damage: f64,
    pub attack_range: f64,
    pub cooldown_steps: u32,
    pub move_speed: u32,
}

fn default_move_speed() -> u32 {
    1
}

/// Inclusive-exclusive rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnRegion {
    pub x: i32,
    pub y: i32,
    pub width: i32,
    pub height: i32,
}

impl SpawnRegion {
    pub fn area(&self) -> usize {
        (self.width.max(0) as usize) * (self.height.max(0) as usize)
    }

    pub fn cells(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (self.y..self.y + self.height).flat_map(move |y| (self.x..self.x + self.width).map(move |x| (x, y)))
    }

    fn overlaps(&self, other: &SpawnRegion) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Squad {
    pub unit_name: String,
    pub spec: UnitTypeSpec,
    pub count: usize,
    pub spawn: SpawnRegion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub map_width: i32,
    pub map_height: i32,
    pub sight_range: f64,
    pub max_steps: u32,
    pub allies: Vec<Squad>,
    pub enemies: Vec<Squad>,
    r_max: f64,
}

pub const DEFAULT_SIGHT_RANGE: f64 = 9.0;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    map_width: i64,
    map_height: i64,
    #[serde(default = "default_sight")]
    sight_range: f64,
    max_steps: i64,
    unit_types: Vec<RawUnitType>,
    allies: Vec<RawSquad>,
    enemies: Vec<RawSquad>,
}

fn default_sight() -> f64 {
    DEFAULT_SIGHT_RANGE
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnitType {
    name: String,
    type_id: u32,
    max_hitpoints: f64,
    #[serde(default)]
    max_shield: f64,
    damage: f64,
    attack_range: f64,
    cooldown_steps: u32,
    #[serde(default = "default_move_speed")]
    move_speed: u32,
}

impl RawUnitType {
    fn spec(&self) -> UnitTypeSpec {
        UnitTypeSpec {
            type_id: self.type_id,
            max_hitpoints: self.max_hitpoints,
            max_shield: self.max_shield,
            damage: self.damage,
            attack_range: self.attack_range,
            cooldown_steps: self.cooldown_steps,
            move_speed: self.move_speed,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSquad {
    unit: String,
    count: i64,
    spawn: SpawnRegion,
}

const BUILTINS: &[(&str, &str)] = &[
    ("3m", include_str!("../../scenarios/3m.toml")),
    ("8m", include_str!("../../scenarios/8m.toml")),
    ("25m", include_str!("../../scenarios/25m.toml")),
    ("2s3z", include_str!("../../scenarios/2s3z.toml")),
];

impl Scenario {
    /// Parses and validates a TOML descriptor.
    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Scenario::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_toml(&text)
    }

    /// The bundled analogues: `3m`, `8m`, `25m` and `2s3z`.
    pub fn builtin(name: &str) -> Result<Scenario, ScenarioError> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::from_toml(text))
            .unwrap_or_else(|| Err(ScenarioError::UnknownBuiltin(name.to_string())))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    pub fn builtin_descriptor(name: &str) -> Option<&'static str> {
        BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    fn from_raw(raw: RawScenario) -> Result<Scenario, ScenarioError> {
        if raw.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if raw.map_width <= 0 || raw.map_width > i32::MAX as i64 {
            return Err(invalid("map_width", "must be a positive integer"));
        }
        if raw.map_height <= 0 || raw.map_height > i32::MAX as i64 {
            return Err(invalid("map_height", "must be a positive integer"));
        }
        if !(raw.sight_range.is_finite() && raw.sight_range > 0.0) {
            return Err(invalid("sight_range", "must be positive"));
        }
        if raw.max_steps <= 0 || raw.max_steps > u32::MAX as i64 {
            return Err(invalid("max_steps", "must be a positive integer"));
        }
        for (i, t) in raw.unit_types.iter().enumerate() {
            validate_unit_type(&format!("unit_types[{i}]"), &t.spec(), raw.sight_range)?;
            if raw.unit_types[..i].iter().any(|o| o.name == t.name) {
                return Err(invalid(format!("unit_types[{i}].name"), format!("duplicates `{}`", t.name)));
            }
        }

        let (w, h) = (raw.map_width as i32, raw.map_height as i32);
        let squads = |key: &str, list: &[RawSquad]| -> Result<Vec<Squad>, ScenarioError> {
            if list.is_empty() {
                return Err(invalid(key, "must list at least one squad"));
            }
            list.iter()
                .enumerate()
                .map(|(i, s)| {
                    let at = format!("{key}[{i}]");
                    let def = raw
                        .unit_types
                        .iter()
                        .find(|t| t.name == s.unit)
                        .ok_or_else(|| invalid(format!("{at}.unit"), format!("references unknown unit type `{}`", s.unit)))?;
                    if s.count < 1 {
                        return Err(invalid(format!("{at}.count"), "must be at least 1"));
                    }
                    let r = s.spawn;
                    if r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > w || r.y + r.height > h {
                        return Err(invalid(format!("{at}.spawn"), format!("region {r:?} lies outside the {w}x{h} map")));
                    }
                    if r.area() < s.count as usize {
                        return Err(invalid(format!("{at}.spawn"), format!("region holds {} cells for {} units", r.area(), s.count)));
                    }
                    Ok(Squad {
                        unit_name: s.unit.clone(),
                        spec: def.spec(),
                        count: s.count as usize,
                        spawn: r,
                    })
                })
                .collect()
        };
        let allies = squads("allies", &raw.allies)?;
        let enemies = squads("enemies", &raw.enemies)?;

        let regions: Vec<(String, SpawnRegion)> = allies
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("allies[{i}].spawn"), s.spawn))
            .chain(enemies.iter().enumerate().map(|(i, s)| (format!("enemies[{i}].spawn"), s.spawn)))
            .collect();
        for (i, (key, a)) in regions.iter().enumerate() {
            if let Some((other, _)) = regions[..i].iter().find(|(_, b)| a.overlaps(b)) {
                return Err(invalid(key.clone(), format!("overlaps {other}")));
            }
        }

        let mut scenario = Scenario {
            name: raw.name,
            map_width: w,
            map_height: h,
            sight_range: raw.sight_range,
            max_steps: raw.max_steps as u32,
            allies,
            enemies,
            r_max: 0.0,
        };
        scenario.r_max = compute_r_max(&scenario);
        Ok(scenario)
    }

    pub fn ally_count(&self) -> usize {
        self.allies.iter().map(|s| s.count).sum()
    }

    pub fn enemy_count(&self) -> usize {
        self.enemies.iter().map(|s| s.count).sum()
    }

    /// Best-case reward numerator; the denominator of the episode reward.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

fn validate_unit_type(key: &str, spec: &UnitTypeSpec, sight_range: f64) -> Result<(), ScenarioError> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(spec.max_hitpoints) {
        return Err(invalid(format!("{key}.max_hitpoints"), "must be positive"));
    }
    if !(spec.max_shield.is_finite() && spec.max_shield >= 0.0) {
        return Err(invalid(format!("{key}.max_shield"), "must be non-negative"));
    }
    if !positive(spec.damage) {
        return Err(invalid(format!("{key}.damage"), "must be positive"));
    }
    if !positive(spec.attack_range) || spec.attack_range > sight_range {
        return Err(invalid(format!("{key}.attack_range"), "must be positive and no larger than sight_range"));
    }
    if spec.move_speed == 0 {
        return Err(invalid(format!("{key}.move_speed"), "must be at least 1"));
    }
    Ok(())
}

/// Numerator of the episode reward in the best case: every enemy hitpoint and
/// shield point is dealt as damage during a step in which the whole enemy team
/// falls, followed by the 200-point win bonus.
pub fn compute_r_max(scenario: &Scenario) -> f64 {
    let pool: f64 = scenario
        .enemies
        .iter()
        .map(|s| (s.spec.max_hitpoints + s.spec.max_shield) * s.count as f64)
        .sum();
    let kills = scenario.enemy_count() as f64;
    pool * 10.0 * kills.max(1.0) + 200.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_v_one(enemy_hp: f64, enemies: usize) -> String {
        format!(
            r#"
name = "test"
map_width = 10
map_height = 10
max_steps = 20

[[unit_types]]
name = "grunt"
type_id = 0
max_hitpoints = {enemy_hp}
damage = 3.0
attack_range = 2.0
cooldown_steps = 0

[[allies]]
unit = "grunt"
count = 1
spawn = {{ x = 0, y = 0, width = 2, height = 2 }}

[[enemies]]
unit = "grunt"
count = {enemies}
spawn = {{ x = 5, y = 5, width = 3, height = 3 }}
"#
        )
    }

    #[test]
    fn builtins_have_expected_compositions() {
        let s = Scenario::builtin("3m").unwrap();
        assert_eq!((s.name.as_str(), s.ally_count(), s.enemy_count()), ("3m", 3, 3));
        assert_eq!(s.sight_range, 9.0);
        let s = Scenario::builtin("8m").unwrap();
        assert_eq!((s.ally_count(), s.enemy_count()), (8, 8));
        let s = Scenario::builtin("25m").unwrap();
        assert_eq!((s.ally_count(), s.enemy_count()), (25, 25));
        let s = Scenario::builtin("2s3z").unwrap();
        assert_eq!((s.ally_count(), s.enemy_count()), (5, 5));
        let mut ids: Vec<u32> = s.allies.iter().map(|q| q.spec.type_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 2);
    }

    #[test]
    fn default_stat_blocks() {
        let m = Scenario::builtin("3m").unwrap().allies[0].spec;
        assert_eq!((m.max_hitpoints, m.max_shield, m.damage, m.attack_range, m.cooldown_steps), (45.0, 0.0, 6.0, 5.0, 1));
        let s = Scenario::builtin("2s3z").unwrap();
        let stalker = s.allies.iter().find(|q| q.unit_name == "stalker").unwrap().spec;
        let zealot = s.allies.iter().find(|q| q.unit_name == "zealot").unwrap().spec;
        assert_eq!((stalker.max_hitpoints, stalker.max_shield, stalker.damage, stalker.attack_range, stalker.cooldown_steps), (80.0, 80.0, 10.0, 6.0, 2));
        assert_eq!((zealot.max_hitpoints, zealot.max_shield, zealot.damage, zealot.attack_range, zealot.cooldown_steps), (100.0, 50.0, 8.0, 1.0, 1));
    }

    #[test]
    fn r_max_single_enemy() {
        // One enemy with 10 HP: 10 damage x 10 x 1 kill + 200 win bonus.
        let s = Scenario::from_toml(&one_v_one(10.0, 1)).unwrap();
        assert_eq!(s.r_max(), 300.0);
    }

    #[test]
    fn r_max_grows_with_enemy_count() {
        let one = Scenario::from_toml(&one_v_one(10.0, 1)).unwrap();
        let two = Scenario::from_toml(&one_v_one(10.0, 2)).unwrap();
        assert!(two.r_max() > one.r_max());
    }

    #[test]
    fn zero_count_is_rejected() {
        let text = one_v_one(10.0, 1).replacen("count = 1", "count = 0", 1);
        let err = Scenario::from_toml(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref key, .. } if key == "allies[0].count"), "{err}");
    }

    #[test]
    fn out_of_bounds_spawn_is_rejected() {
        let text = one_v_one(10.0, 1).replace("x = 5, y = 5", "x = 8, y = 5");
        let err = Scenario::from_toml(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref key, .. } if key == "enemies[0].spawn"), "{err}");
    }

    #[test]
    fn parse_error_names_the_key() {
        let text = one_v_one(10.0, 1).replace("max_steps = 20", "max_steps = \"many\"");
        let err = Scenario::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("max_steps"), "{err}");
        let text = one_v_one(10.0, 1).replace("map_height = 10\n", "");
        let err = Scenario::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("map_height"), "{err}");
    }

    #[test]
    fn attack_range_beyond_sight_is_rejected() {
        let text = one_v_one(10.0, 1).replace("attack_range = 2.0", "attack_range = 12.0");
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn overlapping_spawns_are_rejected() {
        let text = one_v_one(10.0, 1).replace("x = 5, y = 5", "x = 1, y = 1");
        let err = Scenario::from_toml(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref key, .. } if key == "enemies[0].spawn"));
    }
}
