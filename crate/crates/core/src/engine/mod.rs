//! Grid combat simulator: scenarios, episodes, scripted opponents and the
//! shared team reward.

pub mod action;
pub mod episode;
pub mod observation;
pub mod reward;
pub mod scenario;

pub use action::{Action, ACTION_COUNT};
pub use episode::{DamageEvent, EngineError, Episode, Position, StepOutcome, Team, UnitId, UnitState};
pub use observation::{LocalObservation, SelfFeatures, VisibleUnit};
pub use reward::{compute_episode_reward, RewardError, StepDamage};
pub use scenario::{compute_r_max, Scenario, ScenarioError, SpawnRegion, Squad, UnitTypeSpec};
