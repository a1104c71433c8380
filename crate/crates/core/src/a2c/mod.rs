//! Advantage actor-critic training with one policy shared by every ally.
//!
//! Each episode is played to the end under an ε-soft behaviour policy, then
//! a single Monte Carlo update is applied from the whole trajectory.

mod loss;
mod policy;
mod schedule;
mod train;
mod trajectory;

pub use loss::{a2c_gradients, a2c_losses, Losses, PROB_FLOOR};
pub use policy::{argmax, discounted_returns, select_action, DistributionError};
pub use schedule::{epsilon_at, EpsilonSchedule};
pub use train::{
    evaluate_policy, play_episode, train_run, train_run_with, update, EpisodeRecord, Rollout, RunConfig, RunResult,
    DEFAULT_DISCOUNT, DEFAULT_EPISODES, DEFAULT_HIDDEN, DEFAULT_LR, DEFAULT_SEEDS,
};
pub use trajectory::{Sample, Trajectory};

use crate::engine::EngineError;
use crate::influence::EncodingError;
use crate::nn::NnError;
use crate::transfer::{CheckpointError, EncodingSchema};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("checkpoint schema {found} is incompatible with the run's {expected}")]
    SchemaMismatch {
        expected: EncodingSchema,
        found: EncodingSchema,
    },
    #[error("policy input width {found_state_len} is incompatible with {expected}")]
    TransferIncompatible {
        expected: EncodingSchema,
        found_state_len: usize,
    },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory holds no samples")]
    EmptyTrajectory,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
