//! Shared team reward.
//!
//! The episode reward is `20 * numerator / r_max`, where the numerator sums,
//! over steps, the damage allies dealt that step times 10 times the number
//! of enemies killed that step, plus 200 on a win. A step without kills
//! still counts its damage once (the kill multiplier is floored at 1).

use super::episode::{DamageEvent, Team};
use thiserror::Error;

/// Upper bound of the episode reward.
pub const REWARD_SCALE: f64 = 20.0;
pub const DAMAGE_WEIGHT: f64 = 10.0;
pub const WIN_BONUS: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("r_max must be positive, got {0}")]
    NonPositiveRMax(f64),
    #[error("damage must be non-negative and finite, got {0}")]
    InvalidDamage(f64),
}

/// Ally damage and enemy kills within one environment step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDamage {
    pub damage: f64,
    pub kills: u32,
}

impl StepDamage {
    /// Sums ally-on-enemy events; enemy attacks do not earn reward.
    pub fn from_events(events: &[DamageEvent]) -> StepDamage {
        events
            .iter()
            .filter(|e| e.attacker_team == Team::Ally)
            .fold(StepDamage::default(), |acc, e| StepDamage {
                damage: acc.damage + e.damage_dealt,
                kills: acc.kills + u32::from(e.kill),
            })
    }

    /// This step's contribution to the reward numerator.
    pub fn numerator(&self) -> f64 {
        self.damage * DAMAGE_WEIGHT * f64::from(self.kills.max(1))
    }
}

pub fn win_numerator(win: bool) -> f64 {
    if win {
        WIN_BONUS
    } else {
        0.0
    }
}

/// Episode reward in `[0, 20]`.
pub fn compute_episode_reward(steps: &[StepDamage], win: bool, r_max: f64) -> Result<f64, RewardError> {
    if !(r_max > 0.0) {
        return Err(RewardError::NonPositiveRMax(r_max));
    }
    let mut numerator = win_numerator(win);
    for s in steps {
        if !(s.damage.is_finite() && s.damage >= 0.0) {
            return Err(RewardError::InvalidDamage(s.damage));
        }
        numerator += s.numerator();
    }
    Ok((REWARD_SCALE * numerator / r_max).clamp(0.0, REWARD_SCALE))
}
