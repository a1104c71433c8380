use crate::engine::{Action, UnitId, ACTION_COUNT};
use ndarray::ArrayView2;

/// One agent's decision at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub agent: UnitId,
    pub step: u32,
    pub action: Action,
    /// Team reward of the step the action was taken in.
    pub reward: f64,
    pub probs: [f64; ACTION_COUNT],
    pub value: f64,
}

/// Everything recorded during one episode. States are stored row-major in a
/// single buffer so they can be viewed as a batch without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
    samples: Vec<Sample>,
    pub episode_reward: f64,
    pub win: bool,
    pub steps: u32,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            states: Vec::new(),
            samples: Vec::new(),
            episode_reward: 0.0,
            win: false,
            steps: 0,
        }
    }

    /// Appends a sample. Samples must arrive in step order; within a step
    /// any agent order is accepted.
    pub fn push(&mut self, state: &[f64], sample: Sample) {
        assert_eq!(state.len(), self.dim, "state width");
        if let Some(last) = self.samples.last() {
            assert!(sample.step >= last.step, "samples must be in step order");
        }
        self.states.extend_from_slice(state);
        self.samples.push(sample);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.samples.len(), self.dim), &self.states).expect("buffer holds whole rows")
    }

    /// Agents that acted at least once, ascending.
    pub fn agents(&self) -> Vec<UnitId> {
        let mut ids: Vec<UnitId> = self.samples.iter().map(|s| s.agent).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Indices of `agent`'s samples in step order.
    pub fn agent_indices(&self, agent: UnitId) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.samples[i].agent == agent).collect()
    }

    pub(crate) fn set_values(&mut self, values: impl Iterator<Item = f64>) {
        for (s, v) in self.samples.iter_mut().zip(values) {
            s.value = v;
        }
    }

    /// Discounted return of every sample, computed along each agent's own
    /// sequence.
    pub fn returns(&self, discount: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.samples.len()];
        let mut running: std::collections::HashMap<UnitId, f64> = std::collections::HashMap::new();
        for (i, s) in self.samples.iter().enumerate().rev() {
            let g = running.entry(s.agent).or_insert(0.0);
            *g = s.reward + discount * *g;
            out[i] = *g;
        }
        out
    }
}
