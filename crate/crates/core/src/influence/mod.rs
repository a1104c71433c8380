//! Scenario-independent state encoding: local and global influence maps,
//! feature normalisation, and the fixed-length policy input.

pub mod grid;
pub mod normalize;
pub mod state;

pub use grid::{
    build_agent_im, build_local_im, build_maim, AimParams, Frame, GridSpec, InfluenceGrid, Resolution, MAIM_SIDE,
};
pub use normalize::FeatureNormalizer;
pub use state::{assemble_state, state_len, EncodedState, StateEncoder, LAYOUT_VERSION};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("unit {unit_id} at distance {distance} lies beyond sight range {sight_range}")]
    BeyondSight {
        unit_id: usize,
        distance: f64,
        sight_range: f64,
    },
    #[error("local map resolution {current} does not match previous step's {previous}")]
    ResolutionMismatch { current: usize, previous: usize },
    #[error("unsupported local map resolution {0}; expected 19, 37 or 55")]
    UnsupportedResolution(usize),
    #[error("global map must be 64x64, got side {0}")]
    BadGlobalMap(usize),
}
