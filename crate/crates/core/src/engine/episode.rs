//! Turn-stepped grid combat.
//!
//! Each step runs in fixed phases:
//! 1. every living unit's intent is derived from the pre-step state
//!    (allies from the supplied actions, enemies from [`Episode::scripted_opponent`]);
//! 2. attacks land simultaneously, shields absorbing damage first;
//! 3. units reduced to zero hitpoints leave play;
//! 4. survivors move in ascending `unit_id` order, a move into an occupied
//!    or off-map cell being a no-op;
//! 5. cooldowns tick down and attackers reload.

use super::action::Action;
use super::observation::{LocalObservation, SelfFeatures, VisibleUnit};
use super::reward::{self, StepDamage, REWARD_SCALE};
use super::scenario::{Scenario, UnitTypeSpec};
use crate::influence::normalize::FeatureNormalizer;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

pub type UnitId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("expected one action per living ally ({expected}), got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("episode already terminated")]
    EpisodeOver,
    #[error("unit {0} does not exist")]
    UnknownUnit(UnitId),
    #[error("unit {0} is dead")]
    DeadUnit(UnitId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Team {
    Ally,
    Enemy,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Ally => Team::Enemy,
            Team::Enemy => Team::Ally,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Euclidean distance. The squared sum is an exact integer, so equal
    /// squared distances always compare equal.
    pub fn distance(self, other: Position) -> f64 {
        let dx = f64::from(other.x - self.x);
        let dy = f64::from(other.y - self.y);
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitState {
    pub unit_id: UnitId,
    pub team: Team,
    pub spec: UnitTypeSpec,
    pub position: Position,
    pub hitpoints: f64,
    pub shield: f64,
    pub cooldown_remaining: u32,
    pub alive: bool,
    pub last_action: Action,
}

impl UnitState {
    pub fn health_fraction(&self) -> f64 {
        (self.hitpoints / self.spec.max_hitpoints).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageEvent {
    pub attacker_id: UnitId,
    pub attacker_team: Team,
    pub target_id: UnitId,
    pub damage_dealt: f64,
    pub kill: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// One observation per living ally, ascending `unit_id`.
    pub observations: Vec<LocalObservation>,
    pub damage_events: Vec<DamageEvent>,
    /// Ally damage and kills of this step.
    pub step_damage: StepDamage,
    /// This step's share of the episode reward; summing it over an episode
    /// gives the episode reward.
    pub step_reward: f64,
    pub terminal: bool,
    pub win: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Intent {
    Attack(UnitId),
    Move(Action),
    Hold,
}

#[derive(Debug, Clone)]
pub struct Episode {
    scenario: Arc<Scenario>,
    units: Vec<UnitState>,
    steps: u32,
    terminal: bool,
    win: bool,
    numerator: f64,
    damage_log: Vec<StepDamage>,
    clamped_features: usize,
}

impl Episode {
    /// Spawns both teams at full health. Spawn cells are drawn from each
    /// squad's region with `rng_seed`, so the same seed always yields the
    /// same layout.
    pub fn reset(scenario: Arc<Scenario>, rng_seed: u64) -> (Episode, Vec<LocalObservation>) {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut units = Vec::with_capacity(scenario.ally_count() + scenario.enemy_count());
        let squads = scenario
            .allies
            .iter()
            .map(|s| (Team::Ally, s))
            .chain(scenario.enemies.iter().map(|s| (Team::Enemy, s)));
        for (team, squad) in squads {
            let cells: Vec<(i32, i32)> = squad.spawn.cells().collect();
            let mut picks = sample(&mut rng, cells.len(), squad.count).into_vec();
            picks.sort_unstable();
            for idx in picks {
                let (x, y) = cells[idx];
                units.push(UnitState {
                    unit_id: units.len(),
                    team,
                    spec: squad.spec,
                    position: Position::new(x, y),
                    hitpoints: squad.spec.max_hitpoints,
                    shield: squad.spec.max_shield,
                    cooldown_remaining: 0,
                    alive: true,
                    last_action: Action::Stop,
                });
            }
        }
        let mut episode = Episode {
            scenario,
            units,
            steps: 0,
            terminal: false,
            win: false,
            numerator: 0.0,
            damage_log: Vec::new(),
            clamped_features: 0,
        };
        let obs = episode.observations();
        (episode, obs)
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn units(&self) -> &[UnitState] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> Option<&UnitState> {
        self.units.get(id)
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_win(&self) -> bool {
        self.win
    }

    pub fn damage_log(&self) -> &[StepDamage] {
        &self.damage_log
    }

    /// Reward accumulated so far; final once the episode is terminal.
    pub fn episode_reward(&self) -> f64 {
        (REWARD_SCALE * self.numerator / self.scenario.r_max()).clamp(0.0, REWARD_SCALE)
    }

    /// Observation features that fell outside their declared range.
    pub fn clamped_features(&self) -> usize {
        self.clamped_features
    }

    pub fn living(&self, team: Team) -> impl Iterator<Item = &UnitState> + '_ {
        self.units.iter().filter(move |u| u.alive && u.team == team)
    }

    pub fn living_ally_ids(&self) -> Vec<UnitId> {
        self.living(Team::Ally).map(|u| u.unit_id).collect()
    }

    /// Closest living opponent of `agent_id` within sight range, ties broken
    /// by lowest `unit_id`.
    pub fn resolve_attack_closest(&self, agent_id: UnitId) -> Result<Option<UnitId>, EngineError> {
        let agent = self.units.get(agent_id).ok_or(EngineError::UnknownUnit(agent_id))?;
        if !agent.alive {
            return Err(EngineError::DeadUnit(agent_id));
        }
        Ok(self.closest_opponent(agent))
    }

    fn closest_opponent(&self, agent: &UnitState) -> Option<UnitId> {
        let sight = self.scenario.sight_range;
        let mut best: Option<(f64, UnitId)> = None;
        for other in self.living(agent.team.opponent()) {
            let d = agent.position.distance(other.position);
            if d > sight {
                continue;
            }
            // Units are scanned in ascending id, so strict `<` keeps the lowest id on ties.
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, other.unit_id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Built-in opponent script, one action per living enemy in ascending
    /// `unit_id`: attack the closest visible ally when it is in range, walk
    /// towards it otherwise, stand still when no ally is visible.
    pub fn scripted_opponent(&self) -> Vec<Action> {
        self.living(Team::Enemy)
            .map(|enemy| match self.closest_opponent(enemy) {
                None => Action::Stop,
                Some(target) => {
                    let t = self.units[target].position;
                    if enemy.position.distance(t) <= enemy.spec.attack_range {
                        Action::AttackClosest
                    } else {
                        Action::step_towards(t.x - enemy.position.x, t.y - enemy.position.y)
                    }
                }
            })
            .collect()
    }

    fn intent(&self, unit: &UnitState, action: Action) -> Intent {
        match action {
            Action::Stop => Intent::Hold,
            Action::AttackClosest => match self.closest_opponent(unit) {
                None => Intent::Hold,
                Some(target) => {
                    let t = self.units[target].position;
                    let in_range = unit.position.distance(t) <= unit.spec.attack_range;
                    if in_range && unit.cooldown_remaining == 0 {
                        Intent::Attack(target)
                    } else {
                        // Out of range or reloading: close in on the target instead.
                        Intent::Move(Action::step_towards(t.x - unit.position.x, t.y - unit.position.y))
                    }
                }
            },
            mv => Intent::Move(mv),
        }
    }

    /// Advances the episode by one step. `ally_actions` holds one action per
    /// living ally in ascending `unit_id`.
    pub fn step(&mut self, ally_actions: &[Action]) -> Result<StepOutcome, EngineError> {
        if self.terminal {
            return Err(EngineError::EpisodeOver);
        }
        let ally_ids = self.living_ally_ids();
        if ally_actions.len() != ally_ids.len() {
            return Err(EngineError::ActionCount {
                expected: ally_ids.len(),
                got: ally_actions.len(),
            });
        }
        let enemy_ids: Vec<UnitId> = self.living(Team::Enemy).map(|u| u.unit_id).collect();
        let enemy_actions = self.scripted_opponent();

        let mut orders: Vec<(UnitId, Action)> = ally_ids
            .iter()
            .copied()
            .zip(ally_actions.iter().copied())
            .chain(enemy_ids.iter().copied().zip(enemy_actions))
            .collect();
        orders.sort_unstable_by_key(|(id, _)| *id);
        let intents: Vec<(UnitId, Intent)> = orders
            .iter()
            .map(|&(id, a)| (id, self.intent(&self.units[id], a)))
            .collect();
        for &(id, a) in &orders {
            self.units[id].last_action = a;
        }

        // Attacks resolve against the pre-step state: a unit killed this step
        // still fires.
        let mut events = Vec::new();
        let mut fired = vec![false; self.units.len()];
        for &(id, intent) in &intents {
            let Intent::Attack(target_id) = intent else { continue };
            fired[id] = true;
            let damage = self.units[id].spec.damage;
            let attacker_team = self.units[id].team;
            let target = &mut self.units[target_id];
            if target.hitpoints <= 0.0 {
                continue;
            }
            let absorbed = target.shield.min(damage);
            target.shield -= absorbed;
            let wound = target.hitpoints.min(damage - absorbed);
            target.hitpoints -= wound;
            if target.hitpoints <= 0.0 {
                target.hitpoints = 0.0;
            }
            events.push(DamageEvent {
                attacker_id: id,
                attacker_team,
                target_id,
                damage_dealt: absorbed + wound,
                kill: target.hitpoints == 0.0,
            });
        }
        for u in &mut self.units {
            if u.alive && u.hitpoints <= 0.0 {
                u.alive = false;
            }
        }

        self.apply_moves(&intents);

        for u in self.units.iter_mut().filter(|u| u.alive) {
            u.cooldown_remaining = if fired[u.unit_id] {
                u.spec.cooldown_steps
            } else {
                u.cooldown_remaining.saturating_sub(1)
            };
        }

        self.steps += 1;
        let allies_left = self.living(Team::Ally).count();
        let enemies_left = self.living(Team::Enemy).count();
        let win = enemies_left == 0 && allies_left > 0;
        self.terminal = allies_left == 0 || enemies_left == 0 || self.steps >= self.scenario.max_steps;
        self.win = win;

        let step_damage = StepDamage::from_events(&events);
        let increment = step_damage.numerator() + reward::win_numerator(win);
        self.numerator += increment;
        self.damage_log.push(step_damage);

        Ok(StepOutcome {
            observations: self.observations(),
            damage_events: events,
            step_damage,
            step_reward: REWARD_SCALE * increment / self.scenario.r_max(),
            terminal: self.terminal,
            win,
        })
    }

    fn apply_moves(&mut self, intents: &[(UnitId, Intent)]) {
        let (w, h) = (self.scenario.map_width, self.scenario.map_height);
        let cell = |p: Position| (p.y * w + p.x) as usize;
        let mut occupied = vec![false; (w * h) as usize];
        for u in self.units.iter().filter(|u| u.alive) {
            occupied[cell(u.position)] = true;
        }
        for &(id, intent) in intents {
            let Intent::Move(action) = intent else { continue };
            if !self.units[id].alive {
                continue;
            }
            let Some((dx, dy)) = action.offset() else { continue };
            for _ in 0..self.units[id].spec.move_speed {
                let from = self.units[id].position;
                let to = Position::new(from.x + dx, from.y + dy);
                if to.x < 0 || to.y < 0 || to.x >= w || to.y >= h || occupied[cell(to)] {
                    break;
                }
                occupied[cell(from)] = false;
                occupied[cell(to)] = true;
                self.units[id].position = to;
            }
        }
    }

    /// Local observations of every living ally, ascending `unit_id`.
    pub fn observations(&mut self) -> Vec<LocalObservation> {
        let mut norm = FeatureNormalizer::default();
        let obs = self
            .living(Team::Ally)
            .map(|u| self.observe(u, &mut norm))
            .collect();
        self.clamped_features += norm.clamped();
        obs
    }

    fn observe(&self, me: &UnitState, norm: &mut FeatureNormalizer) -> LocalObservation {
        let scn = &self.scenario;
        let sight = scn.sight_range;
        let mut visible_allies = Vec::new();
        let mut visible_enemies = Vec::new();
        for other in self.units.iter().filter(|u| u.alive && u.unit_id != me.unit_id) {
            let distance = me.position.distance(other.position);
            if distance > sight {
                continue;
            }
            let seen = VisibleUnit {
                unit_id: other.unit_id,
                distance,
                relative_position: (
                    f64::from(other.position.x - me.position.x),
                    f64::from(other.position.y - me.position.y),
                ),
                health_fraction: norm.normalize(other.hitpoints, 0.0, other.spec.max_hitpoints),
                shield_fraction: norm.normalize(other.shield, 0.0, other.spec.max_shield),
                type_id: other.spec.type_id,
            };
            if other.team == me.team {
                visible_allies.push(seen);
            } else {
                visible_enemies.push(seen);
            }
        }
        LocalObservation {
            observer_id: me.unit_id,
            sight_range: sight,
            visible_allies,
            visible_enemies,
            self_features: SelfFeatures {
                health_fraction: norm.normalize(me.hitpoints, 0.0, me.spec.max_hitpoints),
                shield_fraction: norm.normalize(me.shield, 0.0, me.spec.max_shield),
                cooldown_fraction: norm.normalize(f64::from(me.cooldown_remaining), 0.0, f64::from(me.spec.cooldown_steps)),
                x_fraction: norm.normalize(f64::from(me.position.x), 0.0, f64::from(scn.map_width - 1)),
                y_fraction: norm.normalize(f64::from(me.position.y), 0.0, f64::from(scn.map_height - 1)),
                last_action: me.last_action,
            },
        }
    }
}
