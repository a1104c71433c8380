/// Affine map of raw features onto `[0, 1]`, counting values that had to be
/// clamped because they fell outside their declared range.
#[derive(Debug, Clone, Default)]
pub struct FeatureNormalizer {
    clamped: usize,
}

impl FeatureNormalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Maps `value` from `[min, max]` onto `[0, 1]`. A degenerate range
    /// (`max <= min`, e.g. a unit type without shields) maps to 0.
    pub fn normalize(&mut self, value: f64, min: f64, max: f64) -> f64 {
        if !(max > min) {
            if value != min {
                self.clamped += 1;
            }
            return 0.0;
        }
        if !(min..=max).contains(&value) {
            self.clamped += 1;
        }
        if value.is_nan() {
            return 0.0;
        }
        ((value - min) / (max - min)).clamp(0.0, 1.0)
    }

    pub fn clamped(&self) -> usize {
        self.clamped
    }
}
