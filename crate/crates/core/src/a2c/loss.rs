use super::trajectory::Trajectory;
use super::TrainError;
use crate::engine::ACTION_COUNT;
use crate::nn::{softmax, ForwardCache, GradientSet, Network};
use ndarray::{Array2, ArrayView2};

/// Smallest probability fed to the logarithm in the actor loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub actor: f64,
    pub critic: f64,
}

/// Losses and their gradients with respect to the raw network outputs.
pub(crate) struct OutputGrads {
    pub losses: Losses,
    pub actor: Array2<f64>,
    pub critic: Array2<f64>,
}

/// Evaluates both losses from raw actor logits and critic values.
///
/// `actor = -mean(log max(pi(a), floor) * A)` with the advantage held
/// constant, `critic = mean((G - V)^2)`.
pub(crate) fn output_grads(
    logits: ArrayView2<f64>,
    values: ArrayView2<f64>,
    actions: &[usize],
    returns: &[f64],
) -> OutputGrads {
    let n = actions.len();
    let scale = 1.0 / n as f64;
    let mut actor_grad = Array2::zeros((n, ACTION_COUNT));
    let mut critic_grad = Array2::zeros((n, 1));
    let mut actor = 0.0;
    let mut critic = 0.0;
    for i in 0..n {
        let probs = softmax(logits.row(i).as_slice().expect("contiguous logits"));
        let v = values[[i, 0]];
        let advantage = returns[i] - v;
        let a = actions[i];
        let p = probs[a];
        actor -= p.max(PROB_FLOOR).ln() * advantage;
        critic += advantage * advantage;
        // Below the floor the loss is flat in the logits.
        if p >= PROB_FLOOR {
            for (j, &pj) in probs.iter().enumerate() {
                let indicator = if j == a { 1.0 } else { 0.0 };
                actor_grad[[i, j]] = (pj - indicator) * advantage * scale;
            }
        }
        critic_grad[[i, 0]] = -2.0 * advantage * scale;
    }
    OutputGrads {
        losses: Losses {
            actor: actor * scale,
            critic: critic * scale,
        },
        actor: actor_grad,
        critic: critic_grad,
    }
}

/// Actor and critic losses of `trajectory` under the given networks,
/// averaged over every (agent, step) sample.
pub fn a2c_losses(
    trajectory: &Trajectory,
    actor: &Network,
    critic: &Network,
    discount: f64,
) -> Result<Losses, TrainError> {
    let (_, _, g) = evaluate(trajectory, actor, critic, discount)?;
    Ok(g.losses)
}

pub(crate) fn evaluate(
    trajectory: &Trajectory,
    actor: &Network,
    critic: &Network,
    discount: f64,
) -> Result<(ForwardCache, ForwardCache, OutputGrads), TrainError> {
    if trajectory.is_empty() {
        return Err(TrainError::EmptyTrajectory);
    }
    let x = trajectory.states();
    let actor_cache = actor.forward_batch(x)?;
    let critic_cache = critic.forward_batch(x)?;
    let g = grads_from_caches(trajectory, &actor_cache, &critic_cache, discount);
    Ok((actor_cache, critic_cache, g))
}

pub(crate) fn grads_from_caches(
    trajectory: &Trajectory,
    actor_cache: &ForwardCache,
    critic_cache: &ForwardCache,
    discount: f64,
) -> OutputGrads {
    let actions: Vec<usize> = trajectory.samples().iter().map(|s| s.action.index()).collect();
    let returns = trajectory.returns(discount);
    output_grads(actor_cache.outputs().view(), critic_cache.outputs().view(), &actions, &returns)
}

/// Parameter gradients of both losses for `trajectory`.
pub fn a2c_gradients(
    trajectory: &Trajectory,
    actor: &Network,
    critic: &Network,
    discount: f64,
) -> Result<(Losses, GradientSet, GradientSet), TrainError> {
    let (actor_cache, critic_cache, g) = evaluate(trajectory, actor, critic, discount)?;
    let x = trajectory.states();
    let ga = actor.backward(x, &actor_cache, g.actor.view())?;
    let gc = critic.backward(x, &critic_cache, g.critic.view())?;
    Ok((g.losses, ga, gc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::a2c::trajectory::Sample;
    use crate::engine::Action;
    use crate::nn::{ActorCritic, Head};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn push(t: &mut Trajectory, state: &[f64], agent: usize, step: u32, action: Action, reward: f64) {
        t.push(
            state,
            Sample {
                agent,
                step,
                action,
                reward,
                probs: [1.0 / 6.0; 6],
                value: 0.0,
            },
        );
    }

    #[test]
    fn single_step_uniform_policy() {
        // zero networks: pi = 1/6 everywhere and V = 0, so A = G = 1
        let actor = Network::zeros(&[3, 4, 6], Head::Softmax);
        let critic = Network::zeros(&[3, 4, 1], Head::Linear);
        let mut t = Trajectory::new(3);
        push(&mut t, &[0.2, -0.1, 0.5], 0, 0, Action::MoveEast, 1.0);
        let l = a2c_losses(&t, &actor, &critic, 0.9).unwrap();
        assert_abs_diff_eq!(l.actor, -(1.0f64 / 6.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(l.actor, 1.791_759_469_228_055, epsilon = 1e-12);
        assert_abs_diff_eq!(l.critic, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn perfect_critic_zeroes_both_losses() {
        // critic outputs its bias; with a single terminal sample G = r
        let actor = Network::zeros(&[2, 3, 6], Head::Softmax);
        let mut critic = Network::zeros(&[2, 3, 1], Head::Linear);
        critic.layers_mut()[1].bias[0] = 0.75;
        let mut t = Trajectory::new(2);
        push(&mut t, &[1.0, 1.0], 3, 0, Action::Stop, 0.75);
        let l = a2c_losses(&t, &actor, &critic, 0.9).unwrap();
        assert_eq!(l.actor, 0.0);
        assert_eq!(l.critic, 0.0);
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let ac = ActorCritic::new(2, &[2], 6, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(
            a2c_losses(&Trajectory::new(2), &ac.actor, &ac.critic, 0.9),
            Err(TrainError::EmptyTrajectory)
        ));
    }

    /// Straight-line scalar re-implementation for a two-layer network.
    fn scalar_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let l0 = &net.layers()[0];
        let l1 = &net.layers()[1];
        let h: Vec<f64> = (0..l0.outputs())
            .map(|j| {
                let mut z = l0.bias[j];
                for k in 0..x.len() {
                    z += l0.weights[[j, k]] * x[k];
                }
                if z > 0.0 {
                    z
                } else {
                    z.exp() - 1.0
                }
            })
            .collect();
        (0..l1.outputs())
            .map(|j| {
                let mut z = l1.bias[j];
                for k in 0..h.len() {
                    z += l1.weights[[j, k]] * h[k];
                }
                z
            })
            .collect()
    }

    #[test]
    fn two_step_toy_matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ac = ActorCritic::new(4, &[5], 6, &mut rng);
        let states: Vec<Vec<f64>> = (0..2).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let actions = [Action::AttackClosest, Action::MoveWest];
        let rewards = [0.3, 1.2];
        let mut t = Trajectory::new(4);
        for s in 0..2 {
            push(&mut t, &states[s], 0, s as u32, actions[s], rewards[s]);
        }
        let l = a2c_losses(&t, &ac.actor, &ac.critic, 0.9).unwrap();

        let g = [rewards[0] + 0.9 * rewards[1], rewards[1]];
        let mut actor = 0.0;
        let mut critic = 0.0;
        for s in 0..2 {
            let logits = scalar_forward(&ac.actor, &states[s]);
            let m = logits.iter().cloned().fold(f64::MIN, f64::max);
            let z: f64 = logits.iter().map(|v| (v - m).exp()).sum();
            let p = (logits[actions[s].index()] - m).exp() / z;
            let v = scalar_forward(&ac.critic, &states[s])[0];
            actor += -p.ln() * (g[s] - v);
            critic += (g[s] - v).powi(2);
        }
        assert_abs_diff_eq!(l.actor, actor / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.critic, critic / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ac = ActorCritic::new(3, &[4, 3], 6, &mut rng);
        let mut t = Trajectory::new(3);
        for step in 0..3u32 {
            for agent in 0..2 {
                let s: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let a = Action::from_index(rng.gen_range(0..6)).unwrap();
                push(&mut t, &s, agent, step, a, rng.gen_range(0.0..2.0));
            }
        }
        let (_, ga, gc) = a2c_gradients(&t, &ac.actor, &ac.critic, 0.9).unwrap();

        // Critic: plain function of its parameters.
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for (l, layer) in ac.critic.layers().iter().enumerate() {
            for ((r, c), _) in layer.weights.indexed_iter() {
                let mut plus = ac.critic.clone();
                plus.layers_mut()[l].weights[[r, c]] += h;
                let mut minus = ac.critic.clone();
                minus.layers_mut()[l].weights[[r, c]] -= h;
                let fd = (a2c_losses(&t, &ac.actor, &plus, 0.9).unwrap().critic
                    - a2c_losses(&t, &ac.actor, &minus, 0.9).unwrap().critic)
                    / (2.0 * h);
                let an = gc.layers[l].weights[[r, c]];
                worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-8));
            }
        }
        assert!(worst < 1e-5, "critic {worst}");

        // Actor: the advantage is a constant, so perturbing actor weights
        // alone differentiates exactly the stop-gradient loss.
        let mut worst: f64 = 0.0;
        for (l, layer) in ac.actor.layers().iter().enumerate() {
            for ((r, c), _) in layer.weights.indexed_iter() {
                let mut plus = ac.actor.clone();
                plus.layers_mut()[l].weights[[r, c]] += h;
                let mut minus = ac.actor.clone();
                minus.layers_mut()[l].weights[[r, c]] -= h;
                let fd = (a2c_losses(&t, &plus, &ac.critic, 0.9).unwrap().actor
                    - a2c_losses(&t, &minus, &ac.critic, 0.9).unwrap().actor)
                    / (2.0 * h);
                let an = ga.layers[l].weights[[r, c]];
                worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-8));
            }
        }
        assert!(worst < 1e-5, "actor {worst}");
    }

    #[test]
    fn one_small_step_decreases_critic_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ac = ActorCritic::new(6, &[8, 4], 6, &mut rng);
        let mut t = Trajectory::new(6);
        for step in 0..5u32 {
            let s: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            push(&mut t, &s, 0, step, Action::Stop, rng.gen_range(0.0..1.0));
        }
        let (before, _, gc) = a2c_gradients(&t, &ac.actor, &ac.critic, 0.9).unwrap();
        let mut critic = ac.critic.clone();
        critic.apply_sgd(&gc, 1e-3).unwrap();
        let after = a2c_losses(&t, &ac.actor, &critic, 0.9).unwrap();
        assert!(after.critic < before.critic, "{} !< {}", after.critic, before.critic);
    }
}
