use super::loss::{grads_from_caches, Losses};
use super::policy::select_action;
use super::schedule::EpsilonSchedule;
use super::trajectory::{Sample, Trajectory};
use super::TrainError;
use crate::engine::{Episode, Scenario, ACTION_COUNT};
use crate::influence::{build_maim, state_len, Resolution, StateEncoder};
use crate::nn::{softmax, ActorCritic, ForwardCache};
use crate::transfer::{EncodingSchema, PolicyCheckpoint, Provenance};
use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub const DEFAULT_EPISODES: usize = 2000;
pub const DEFAULT_SEEDS: usize = 31;
pub const DEFAULT_LR: f64 = 0.0001;
pub const DEFAULT_DISCOUNT: f64 = 0.9;
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 128];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Arc<Scenario>,
    pub resolution: Resolution,
    pub episodes: usize,
    /// Number of independent runs launched by the transfer pipeline.
    pub seeds: usize,
    pub schedule: EpsilonSchedule,
    pub lr: f64,
    pub discount: f64,
    pub hidden: Vec<usize>,
    /// Environment steps already spent on the schedule when the run starts.
    /// Zero restarts exploration for every run.
    pub epsilon_offset: u64,
}

impl RunConfig {
    pub fn new(scenario: Arc<Scenario>) -> Self {
        Self {
            scenario,
            resolution: Resolution::default(),
            episodes: DEFAULT_EPISODES,
            seeds: DEFAULT_SEEDS,
            schedule: EpsilonSchedule::default(),
            lr: DEFAULT_LR,
            discount: DEFAULT_DISCOUNT,
            hidden: DEFAULT_HIDDEN.to_vec(),
            epsilon_offset: 0,
        }
    }

    pub fn schema(&self) -> EncodingSchema {
        EncodingSchema::for_resolution(self.resolution)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.episodes == 0 {
            return bad("episodes must be positive".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be positive".into());
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!("discount {} must lie strictly between 0 and 1", self.discount));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer sizes must be positive".into());
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub reward: f64,
    pub win: bool,
    /// Exploration rate at the episode's first step.
    pub epsilon: f64,
    pub steps: u32,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub checkpoint: PolicyCheckpoint,
    pub records: Vec<EpisodeRecord>,
}

impl RunResult {
    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }
}

/// An episode played by a fixed policy, with the forward passes kept so the
/// update does not have to repeat them.
pub struct Rollout {
    pub trajectory: Trajectory,
    actor: ForwardCache,
    critic: ForwardCache,
}

fn stack(parts: &[ForwardCache]) -> ForwardCache {
    let depth = parts[0].activations.len();
    let join = |pick: &dyn Fn(&ForwardCache) -> &Array2<f64>| -> Array2<f64> {
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|c| pick(c).view()).collect();
        concatenate(Axis(0), &views).expect("congruent caches")
    };
    ForwardCache {
        activations: (0..depth).map(|l| join(&|c: &ForwardCache| &c.activations[l])).collect(),
        pre: (0..depth).map(|l| join(&|c: &ForwardCache| &c.pre[l])).collect(),
    }
}

/// Plays one episode with every ally acting through the same `policy`.
/// `epsilon` is queried once per environment step.
pub fn play_episode<R: Rng + ?Sized>(
    policy: &ActorCritic,
    scenario: &Arc<Scenario>,
    resolution: Resolution,
    env_seed: u64,
    mut epsilon: impl FnMut() -> f64,
    rng: &mut R,
) -> Result<Rollout, TrainError> {
    let dim = state_len(resolution);
    if policy.input_dim() != dim {
        return Err(TrainError::TransferIncompatible {
            expected: EncodingSchema::for_resolution(resolution),
            found_state_len: policy.input_dim(),
        });
    }
    let (mut episode, mut obs) = Episode::reset(scenario.clone(), env_seed);
    let mut encoder = StateEncoder::new(resolution);
    let mut trajectory = Trajectory::new(dim);
    let mut actor_parts = Vec::new();

    while !episode.is_terminal() {
        let maim = build_maim(
            episode.units(),
            scenario.map_width,
            scenario.map_height,
            scenario.sight_range,
        );
        let mut batch = Vec::with_capacity(obs.len() * dim);
        let mut locals = Vec::with_capacity(obs.len());
        for o in &obs {
            let (state, local) = encoder.encode(o, &maim)?;
            batch.extend_from_slice(state.as_slice());
            locals.push(local);
        }
        let x = ArrayView2::from_shape((obs.len(), dim), &batch).expect("whole rows");
        let actor_cache = policy.actor.forward_batch(x)?;

        let eps = epsilon();
        let mut actions = Vec::with_capacity(obs.len());
        let mut dists = Vec::with_capacity(obs.len());
        for row in actor_cache.outputs().rows() {
            let probs = softmax(row.as_slice().expect("contiguous"));
            actions.push(select_action(&probs, eps, rng)?);
            let mut fixed = [0.0; ACTION_COUNT];
            fixed.copy_from_slice(&probs);
            dists.push(fixed);
        }

        let step = episode.steps();
        let outcome = episode.step(&actions)?;
        for (i, (o, local)) in obs.iter().zip(locals).enumerate() {
            trajectory.push(
                &batch[i * dim..(i + 1) * dim],
                Sample {
                    agent: o.observer_id,
                    step,
                    action: actions[i],
                    reward: outcome.step_reward,
                    probs: dists[i],
                    value: f64::NAN,
                },
            );
            encoder.remember(o.observer_id, local, actions[i]);
        }
        actor_parts.push(actor_cache);
        obs = outcome.observations;
    }

    // The critic does not influence behaviour, so its values are computed
    // once over the whole episode; a large batch is far cheaper than one
    // small pass per step.
    let critic = policy.critic.forward_batch(trajectory.states())?;
    trajectory.set_values(critic.outputs().column(0).iter().copied());
    trajectory.episode_reward = episode.episode_reward();
    trajectory.win = episode.is_win();
    trajectory.steps = episode.steps();
    Ok(Rollout {
        trajectory,
        actor: stack(&actor_parts),
        critic,
    })
}

/// One plain SGD step on both networks from a whole-episode rollout played
/// by this same `policy`.
pub fn update(policy: &mut ActorCritic, rollout: &Rollout, lr: f64, discount: f64) -> Result<Losses, TrainError> {
    let t = &rollout.trajectory;
    if t.is_empty() {
        return Err(TrainError::EmptyTrajectory);
    }
    let g = grads_from_caches(t, &rollout.actor, &rollout.critic, discount);
    let x = t.states();
    let ga = policy.actor.backward(x, &rollout.actor, g.actor.view())?;
    let gc = policy.critic.backward(x, &rollout.critic, g.critic.view())?;
    policy.actor.apply_sgd(&ga, lr)?;
    policy.critic.apply_sgd(&gc, lr)?;
    Ok(g.losses)
}

/// Trains one run. Starts from `initial` when given (transfer), otherwise
/// from a fresh Glorot initialisation drawn from `rng_seed`.
pub fn train_run(
    config: &RunConfig,
    initial: Option<&PolicyCheckpoint>,
    rng_seed: u64,
) -> Result<RunResult, TrainError> {
    train_run_with(config, initial, rng_seed, |_| {})
}

/// [`train_run`] with a callback after every episode.
pub fn train_run_with(
    config: &RunConfig,
    initial: Option<&PolicyCheckpoint>,
    rng_seed: u64,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<RunResult, TrainError> {
    config.validate()?;
    let schema = config.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut policy, mut provenance) = match initial {
        Some(ck) => {
            if ck.schema != schema {
                return Err(TrainError::SchemaMismatch {
                    expected: schema,
                    found: ck.schema,
                });
            }
            (ck.policy.clone(), ck.provenance.clone())
        }
        None => (
            ActorCritic::new(schema.state_len, &config.hidden, ACTION_COUNT, &mut rng),
            Vec::new(),
        ),
    };

    let mut t = config.epsilon_offset;
    let mut records = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let start_eps = config.schedule.epsilon_at(t);
        let env_seed: u64 = rng.gen();
        let rollout = {
            let schedule = &config.schedule;
            let t = &mut t;
            play_episode(
                &policy,
                &config.scenario,
                config.resolution,
                env_seed,
                move || {
                    let e = schedule.epsilon_at(*t);
                    *t += 1;
                    e
                },
                &mut rng,
            )?
        };
        update(&mut policy, &rollout, config.lr, config.discount)?;
        let record = EpisodeRecord {
            episode,
            reward: rollout.trajectory.episode_reward,
            win: rollout.trajectory.win,
            epsilon: start_eps,
            steps: rollout.trajectory.steps,
        };
        on_episode(&record);
        records.push(record);
    }

    provenance.push(Provenance {
        scenario: config.scenario.name.clone(),
        episodes: config.episodes,
        rng_seed,
    });
    let checkpoint = PolicyCheckpoint::new(schema, policy, provenance)?;
    Ok(RunResult { checkpoint, records })
}

/// Plays `episodes` episodes with a frozen policy at a fixed exploration
/// rate. With `epsilon = 0` the result depends only on the policy, the
/// scenario and `rng_seed`.
pub fn evaluate_policy(
    policy: &ActorCritic,
    scenario: &Arc<Scenario>,
    resolution: Resolution,
    episodes: usize,
    epsilon: f64,
    rng_seed: u64,
) -> Result<Vec<EpisodeRecord>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..episodes)
        .map(|episode| {
            let env_seed: u64 = rng.gen();
            let r = play_episode(policy, scenario, resolution, env_seed, || epsilon, &mut rng)?;
            Ok(EpisodeRecord {
                episode,
                reward: r.trajectory.episode_reward,
                win: r.trajectory.win,
                epsilon,
                steps: r.trajectory.steps,
            })
        })
        .collect()
}
