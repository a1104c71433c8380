use super::action::Action;
use super::episode::UnitId;

/// Another unit as seen by an observer.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibleUnit {
    pub unit_id: UnitId,
    pub distance: f64,
    /// Offset from the observer in grid cells.
    pub relative_position: (f64, f64),
    pub health_fraction: f64,
    pub shield_fraction: f64,
    pub type_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfFeatures {
    pub health_fraction: f64,
    pub shield_fraction: f64,
    pub cooldown_fraction: f64,
    pub x_fraction: f64,
    pub y_fraction: f64,
    pub last_action: Action,
}

impl SelfFeatures {
    /// `[health, shield, cooldown, x, y]`.
    pub fn scalars(&self) -> [f64; 5] {
        [
            self.health_fraction,
            self.shield_fraction,
            self.cooldown_fraction,
            self.x_fraction,
            self.y_fraction,
        ]
    }
}

/// What one ally perceives: every living unit within its sight range plus
/// its own state.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObservation {
    pub observer_id: UnitId,
    pub sight_range: f64,
    pub visible_allies: Vec<VisibleUnit>,
    pub visible_enemies: Vec<VisibleUnit>,
    pub self_features: SelfFeatures,
}
