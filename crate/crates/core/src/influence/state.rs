//! Fixed-length policy input.
//!
//! Layout (version [`LAYOUT_VERSION`]):
//!
//! | segment            | length   |
//! |--------------------|----------|
//! | current local map  | r * r    |
//! | global map         | 64 * 64  |
//! | previous local map | r * r    |
//! | previous action    | 6        |
//! | self features      | 5        |
//!
//! The length depends only on the local resolution `r`, never on how many
//! units a scenario fields.

use super::grid::{Frame, InfluenceGrid, Resolution, MAIM_SIDE};
use super::EncodingError;
use crate::engine::{Action, LocalObservation, SelfFeatures, UnitId, ACTION_COUNT};
use std::collections::HashMap;

pub const LAYOUT_VERSION: u32 = 1;
pub const SELF_FEATURES: usize = 5;

/// Length of the encoded state at `resolution`.
pub fn state_len(resolution: Resolution) -> usize {
    let r = resolution.side();
    2 * r * r + MAIM_SIDE * MAIM_SIDE + ACTION_COUNT + SELF_FEATURES
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    resolution: Resolution,
    data: Vec<f64>,
}

impl EncodedState {
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn segment(&self, index: usize) -> &[f64] {
        let r2 = self.resolution.side().pow(2);
        let bounds = [0, r2, r2 + MAIM_SIDE * MAIM_SIDE, 2 * r2 + MAIM_SIDE * MAIM_SIDE];
        let starts = [bounds[0], bounds[1], bounds[2], bounds[3], bounds[3] + ACTION_COUNT];
        let end = if index + 1 < starts.len() { starts[index + 1] } else { self.data.len() };
        &self.data[starts[index]..end]
    }

    pub fn current_local_im(&self) -> &[f64] {
        self.segment(0)
    }

    pub fn maim(&self) -> &[f64] {
        self.segment(1)
    }

    pub fn prev_local_im(&self) -> &[f64] {
        self.segment(2)
    }

    pub fn prev_action(&self) -> &[f64] {
        self.segment(3)
    }

    pub fn self_features(&self) -> &[f64] {
        self.segment(4)
    }
}

/// Concatenates the parts of one agent's state in layout order.
pub fn assemble_state(
    current: &InfluenceGrid,
    maim: &InfluenceGrid,
    prev: &InfluenceGrid,
    prev_action: Action,
    self_features: &SelfFeatures,
) -> Result<EncodedState, EncodingError> {
    let resolution = Resolution::from_side(current.side()).ok_or(EncodingError::UnsupportedResolution(current.side()))?;
    if prev.side() != current.side() || prev.frame() != Frame::Local || current.frame() != Frame::Local {
        return Err(EncodingError::ResolutionMismatch {
            current: current.side(),
            previous: prev.side(),
        });
    }
    if maim.side() != MAIM_SIDE || maim.frame() != Frame::Global {
        return Err(EncodingError::BadGlobalMap(maim.side()));
    }
    let mut data = Vec::with_capacity(state_len(resolution));
    data.extend_from_slice(current.cells());
    data.extend_from_slice(maim.cells());
    data.extend_from_slice(prev.cells());
    data.extend_from_slice(&prev_action.one_hot());
    data.extend_from_slice(&self_features.scalars());
    debug_assert_eq!(data.len(), state_len(resolution));
    Ok(EncodedState { resolution, data })
}

/// Per-agent memory of the previous step's local map and action.
#[derive(Debug, Clone)]
pub struct StateEncoder {
    resolution: Resolution,
    memory: HashMap<UnitId, (InfluenceGrid, Action)>,
}

impl StateEncoder {
    pub fn new(resolution: Resolution) -> Self {
        Self {
            resolution,
            memory: HashMap::new(),
        }
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    /// Encodes `obs`, using a zero map and `Stop` when the agent has no
    /// history yet. Returns the state together with the current local map.
    pub fn encode(
        &self,
        obs: &LocalObservation,
        maim: &InfluenceGrid,
    ) -> Result<(EncodedState, InfluenceGrid), EncodingError> {
        let local = super::grid::build_local_im(obs, self.resolution)?;
        let state = match self.memory.get(&obs.observer_id) {
            Some((prev, action)) => assemble_state(&local, maim, prev, *action, &obs.self_features)?,
            None => assemble_state(
                &local,
                maim,
                &InfluenceGrid::zeros_local(self.resolution),
                Action::Stop,
                &obs.self_features,
            )?,
        };
        Ok((state, local))
    }

    pub fn remember(&mut self, agent: UnitId, local: InfluenceGrid, action: Action) {
        self.memory.insert(agent, (local, action));
    }
}
