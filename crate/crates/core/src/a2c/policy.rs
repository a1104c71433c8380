use crate::engine::{Action, ACTION_COUNT};
use rand::Rng;
use thiserror::Error;

/// Tolerance on the total mass of an action distribution.
const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("expected {ACTION_COUNT} action probabilities, got {0}")]
    Length(usize),
    #[error("action probabilities must be finite and non-negative: {0:?}")]
    BadEntry(Vec<f64>),
    #[error("action probabilities sum to {0}, not 1")]
    BadMass(f64),
    #[error("epsilon {0} outside [0, 1]")]
    BadEpsilon(f64),
}

fn check_simplex(probs: &[f64]) -> Result<(), DistributionError> {
    if probs.len() != ACTION_COUNT {
        return Err(DistributionError::Length(probs.len()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DistributionError::BadEntry(probs.to_vec()));
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(DistributionError::BadMass(mass));
    }
    Ok(())
}

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// ε-soft choice: greedy with probability `1 - epsilon`, otherwise a draw
/// proportional to `probs`.
pub fn select_action<R: Rng + ?Sized>(probs: &[f64], epsilon: f64, rng: &mut R) -> Result<Action, DistributionError> {
    check_simplex(probs)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(DistributionError::BadEpsilon(epsilon));
    }
    let explore = rng.gen::<f64>() < epsilon;
    let index = if explore {
        let mass: f64 = probs.iter().sum();
        let u = rng.gen::<f64>() * mass;
        let mut acc = 0.0;
        let mut chosen = argmax(probs);
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        chosen
    } else {
        argmax(probs)
    };
    Ok(Action::from_index(index).expect("index below ACTION_COUNT"))
}

/// `G_t = r_t + discount * G_{t+1}` with `G_T = r_T`.
pub fn discounted_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        g = r + discount * g;
        out[t] = g;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_at_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = [0.5, 0.2, 0.1, 0.1, 0.05, 0.05];
        for _ in 0..200 {
            assert_eq!(select_action(&p, 0.0, &mut rng).unwrap(), Action::MoveNorth);
        }
    }

    #[test]
    fn greedy_ties_take_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = [0.1, 0.3, 0.3, 0.1, 0.1, 0.1];
        assert_eq!(select_action(&p, 0.0, &mut rng).unwrap(), Action::from_index(1).unwrap());
    }

    #[test]
    fn one_hot_is_always_chosen() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        for eps in [0.0, 0.3, 1.0] {
            for _ in 0..500 {
                assert_eq!(select_action(&p, eps, &mut rng).unwrap(), Action::AttackClosest);
            }
        }
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = [1.0 / 6.0; 6];
        p[0] = f64::NAN;
        assert!(matches!(select_action(&p, 0.5, &mut rng), Err(DistributionError::BadEntry(_))));
        assert!(matches!(
            select_action(&[0.5, 0.6, -0.1, 0.0, 0.0, 0.0], 0.5, &mut rng),
            Err(DistributionError::BadEntry(_))
        ));
        assert!(matches!(select_action(&[0.5; 6], 0.5, &mut rng), Err(DistributionError::BadMass(_))));
        assert!(matches!(select_action(&[0.5, 0.5], 0.5, &mut rng), Err(DistributionError::Length(2))));
        assert!(matches!(
            select_action(&[1.0 / 6.0; 6], 1.5, &mut rng),
            Err(DistributionError::BadEpsilon(_))
        ));
    }

    #[test]
    fn returns_examples() {
        let g = discounted_returns(&[0.0, 0.0, 1.0], 0.9);
        assert_abs_diff_eq!(g[0], 0.81, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.9, epsilon = 1e-15);
        assert_eq!(g[2], 1.0);
        assert_eq!(discounted_returns(&[3.5], 0.9), vec![3.5]);
        assert_eq!(discounted_returns(&[0.0; 4], 0.9), vec![0.0; 4]);
        assert!(discounted_returns(&[], 0.9).is_empty());
    }
}
