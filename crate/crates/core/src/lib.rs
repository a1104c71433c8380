//! Scenario-independent multi-agent combat learning.
//!
//! Variable-sized observations are folded into fixed-size influence maps so
//! one actor-critic policy can be trained on one scenario and reused on
//! others with different team sizes and unit types.

pub mod engine;
pub mod influence;
pub mod nn;
pub mod a2c;
pub mod transfer;

pub use a2c::{train_run, EpsilonSchedule, RunConfig, RunResult, TrainError};
pub use engine::{Action, Episode, Scenario};
pub use influence::{EncodedState, Resolution};
pub use transfer::{EncodingSchema, PolicyCheckpoint, Provenance, RunStats};
