use super::TrainError;

/// Linearly decaying exploration rate, counted in environment steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilon_initial: f64,
    pub gamma_steps: u64,
    pub epsilon_min: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            epsilon_initial: 1.0,
            gamma_steps: 30_000,
            epsilon_min: 0.0001,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.epsilon_min > 0.0
            && self.epsilon_min <= self.epsilon_initial
            && self.epsilon_initial <= 1.0
            && self.gamma_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(TrainError::InvalidConfig(format!(
                "epsilon schedule needs 0 < min ({}) <= initial ({}) <= 1 and gamma_steps ({}) > 0",
                self.epsilon_min, self.epsilon_initial, self.gamma_steps
            )))
        }
    }

    /// `max(initial - t * initial / gamma, min)`.
    pub fn epsilon_at(&self, t: u64) -> f64 {
        if t >= self.gamma_steps {
            return self.epsilon_min;
        }
        let decayed = self.epsilon_initial - t as f64 * self.epsilon_initial / self.gamma_steps as f64;
        decayed.max(self.epsilon_min)
    }
}

pub fn epsilon_at(t: u64, schedule: &EpsilonSchedule) -> f64 {
    schedule.epsilon_at(t)
}
