use ndarray::{Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use super::{execute, EpochRecord, FronthaulMeter, LearnerConfig, Phase};
use crate::env::{global_state_dim, local_from_global, local_obs_dim, Environment, NetworkConfig};
use crate::error::Result;
use crate::hddpg::{
    ascend_actor, build_actor, build_critic, fit_critic, local_penalty, map_action, penalty,
    policy_gradient, stack_rows, target_actions, ActorCriticPair, Experience, OuNoise,
    ReplayBuffer, TrackedNet,
};

type LearningRates = (f64, f64);

fn noise(cfg: &LearnerConfig, dim: usize) -> Result<OuNoise> {
    OuNoise::new(
        dim,
        cfg.ou_theta,
        cfg.ou_sigma,
        cfg.beta_initial,
        cfg.beta_decay,
        cfg.beta_floor,
    )
}

/// One critic step, one actor step and the target updates, once the buffer
/// holds a full minibatch.
fn update_pair(
    pair: &mut ActorCriticPair,
    buffer: &ReplayBuffer,
    cfg: &LearnerConfig,
    lr: LearningRates,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(f64, f64)>> {
    if buffer.len() < cfg.batch_size {
        return Ok(None);
    }
    let batch = buffer.sample(cfg.batch_size, rng);
    let loss = pair.critic_train_step(&batch, cfg.gamma, lr.1)?;
    let norm = pair.actor_train_step(&batch, lr.0)?;
    pair.soft_update(cfg.tau)?;
    Ok(Some((loss, norm)))
}

fn with_updates(mut rec: EpochRecord, stats: Option<(f64, f64)>) -> EpochRecord {
    if let Some((loss, norm)) = stats {
        rec.critic_loss = Some(loss);
        rec.actor_grad_norm = Some(norm);
    }
    rec
}

/// Observation rows of SBS `b` taken from a batch of global states.
fn local_rows(states: ArrayView2<'_, f64>, b: usize, cfg: &NetworkConfig) -> Array2<f64> {
    let dim = local_obs_dim(cfg.num_content, cfg.num_sbs);
    let mut out = Array2::zeros((states.nrows(), dim));
    for (mut row, s) in out.rows_mut().into_iter().zip(states.rows()) {
        let s = s.to_vec();
        let local = local_from_global(&s, b, cfg.num_content, cfg.num_sbs);
        row.assign(&ndarray::ArrayView1::from(&local));
    }
    out
}

/// One actor-critic pair over the global state and the joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedAgent {
    pub pair: ActorCriticPair,
    pub noise: OuNoise,
    pub buffer: ReplayBuffer,
}

impl CentralizedAgent {
    pub fn new(cfg: &LearnerConfig, net: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (f, b) = (net.num_content, net.num_sbs);
        Ok(Self {
            pair: ActorCriticPair::new(
                &cfg.shape,
                global_state_dim(f, b),
                f * b,
                b,
                net.cache_capacity,
                rng,
            )?,
            noise: noise(cfg, f * b)?,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
        })
    }

    pub fn greedy(&self, env: &Environment) -> Result<Vec<f64>> {
        self.pair.act(&env.global_state())
    }

    pub(super) fn train_epoch(
        &mut self,
        env: &mut Environment,
        cfg: &LearnerConfig,
        lr: LearningRates,
        rng: &mut ChaCha8Rng,
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = env.config().clone();
        let state = env.global_state();
        let greedy = self.pair.act(&state)?;
        let g = penalty(&greedy, net.num_sbs, net.cache_capacity);
        let beta = self.noise.beta();
        let action = self.noise.explore(&greedy, net.num_content, net.cache_capacity, rng);
        let meter = FronthaulMeter::central(&env.state().users, &net);
        let mut rec = execute(env, &action, Phase::Train, meter)?;
        rec.beta = beta;
        rec.homotopy_reward = shape(rec.reward, g);
        self.buffer.push(Experience {
            state,
            action,
            homotopy_reward: rec.homotopy_reward,
            next_state: env.global_state(),
        })?;
        let stats = update_pair(&mut self.pair, &self.buffer, cfg, lr, rng)?;
        Ok(with_updates(rec, stats))
    }

    pub(super) fn store_transition(
        &mut self,
        env: &mut Environment,
        action: &[f64],
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = env.config().clone();
        let state = env.global_state();
        let g = penalty(action, net.num_sbs, net.cache_capacity);
        let meter = FronthaulMeter::central(&env.state().users, &net);
        let mut rec = execute(env, action, Phase::Warmup, meter)?;
        rec.homotopy_reward = shape(rec.reward, g);
        self.buffer.push(Experience {
            state,
            action: action.to_vec(),
            homotopy_reward: rec.homotopy_reward,
            next_state: env.global_state(),
        })?;
        Ok(rec)
    }
}

/// A critic over the global state and every SBS's action, trained centrally,
/// and one actor per SBS that sees only its own observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PdAgents {
    pub actors: Vec<TrackedNet>,
    pub critic: TrackedNet,
    pub noises: Vec<OuNoise>,
    pub buffer: ReplayBuffer,
    network: NetworkConfig,
}

impl PdAgents {
    /// Initializes the actors in SBS order, then the critic.
    pub fn new(cfg: &LearnerConfig, net: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (f, b) = (net.num_content, net.num_sbs);
        let actors = (0..b)
            .map(|_| build_actor(&cfg.shape, local_obs_dim(f, b), f, 1, net.cache_capacity, rng))
            .collect::<Result<Vec<_>>>()?;
        let critic = build_critic(&cfg.shape, global_state_dim(f, b) + f * b, rng)?;
        let noises = (0..b).map(|_| noise(cfg, f)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            actors,
            critic,
            noises,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            network: net.clone(),
        })
    }

    pub(super) fn from_parts(
        actors: Vec<TrackedNet>,
        critic: TrackedNet,
        noises: Vec<OuNoise>,
        buffer: ReplayBuffer,
        network: NetworkConfig,
    ) -> Self {
        Self {
            actors,
            critic,
            noises,
            buffer,
            network,
        }
    }

    fn local_greedy(&self, b: usize, global: &[f64]) -> Result<Vec<f64>> {
        let obs = local_from_global(global, b, self.network.num_content, self.network.num_sbs);
        Ok(map_action(&self.actors[b].net.forward_one(&obs)?))
    }

    pub fn greedy(&self, env: &Environment) -> Result<Vec<f64>> {
        let global = env.global_state();
        let mut joint = Vec::new();
        for b in 0..self.actors.len() {
            joint.extend(self.local_greedy(b, &global)?);
        }
        Ok(joint)
    }

    pub(super) fn update(&mut self, cfg: &LearnerConfig, lr: LearningRates, rng: &mut ChaCha8Rng) -> Result<Option<(f64, f64)>> {
        if self.buffer.len() < cfg.batch_size {
            return Ok(None);
        }
        let net = &self.network;
        let sd = global_state_dim(net.num_content, net.num_sbs);
        let ad = net.num_content * net.num_sbs;
        let batch = self.buffer.sample(cfg.batch_size, rng);

        let next = stack_rows(batch.iter().map(|e| e.next_state.as_slice()), sd)?;
        let mut blocks = vec![next.clone()];
        for (b, actor) in self.actors.iter().enumerate() {
            blocks.push(target_actions(actor, local_rows(next.view(), b, net).view())?);
        }
        let views: Vec<_> = blocks.iter().map(|m| m.view()).collect();
        let next_joint = ndarray::concatenate(Axis(1), &views).expect("equal row counts");
        let q = self.critic.target.forward(next_joint.view())?.output;
        let targets: Vec<f64> = batch
            .iter()
            .zip(q.column(0))
            .map(|(e, q)| e.homotopy_reward + cfg.gamma * q)
            .collect();

        let states = stack_rows(batch.iter().map(|e| e.state.as_slice()), sd)?;
        let actions = stack_rows(batch.iter().map(|e| e.action.as_slice()), ad)?;
        let inputs = ndarray::concatenate![Axis(1), states, actions];
        let loss = fit_critic(&mut self.critic, inputs.view(), &targets, lr.1)?;

        let mut sq_norm = 0.0;
        for (b, actor) in self.actors.iter_mut().enumerate() {
            let obs = local_rows(states.view(), b, net);
            let offset = sd + b * net.num_content;
            let grad = policy_gradient(&actor.net, &self.critic.net, obs.view(), &inputs, offset)?;
            let n = ascend_actor(actor, &grad, lr.0)?;
            sq_norm += n * n;
        }
        self.critic.soft_update(cfg.tau)?;
        for actor in &mut self.actors {
            actor.soft_update(cfg.tau)?;
        }
        Ok(Some((loss, sq_norm.sqrt())))
    }

    pub(super) fn train_epoch(
        &mut self,
        env: &mut Environment,
        cfg: &LearnerConfig,
        lr: LearningRates,
        rng: &mut ChaCha8Rng,
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = self.network.clone();
        let state = env.global_state();
        let mut greedy = Vec::with_capacity(net.num_content * net.num_sbs);
        for b in 0..net.num_sbs {
            greedy.extend(self.local_greedy(b, &state)?);
        }
        let g = penalty(&greedy, net.num_sbs, net.cache_capacity);
        let beta = self.noises[0].beta();
        let mut action = Vec::with_capacity(greedy.len());
        for (noise, block) in self.noises.iter_mut().zip(greedy.chunks(net.num_content)) {
            action.extend(noise.explore(block, net.num_content, net.cache_capacity, rng));
        }
        let meter = FronthaulMeter::central(&env.state().users, &net);
        let mut rec = execute(env, &action, Phase::Train, meter)?;
        rec.beta = beta;
        rec.homotopy_reward = shape(rec.reward, g);
        self.buffer.push(Experience {
            state,
            action,
            homotopy_reward: rec.homotopy_reward,
            next_state: env.global_state(),
        })?;
        let stats = self.update(cfg, lr, rng)?;
        Ok(with_updates(rec, stats))
    }

    pub(super) fn store_transition(
        &mut self,
        env: &mut Environment,
        action: &[f64],
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = self.network.clone();
        let state = env.global_state();
        let g = penalty(action, net.num_sbs, net.cache_capacity);
        let meter = FronthaulMeter::central(&env.state().users, &net);
        let mut rec = execute(env, action, Phase::Warmup, meter)?;
        rec.homotopy_reward = shape(rec.reward, g);
        self.buffer.push(Experience {
            state,
            action: action.to_vec(),
            homotopy_reward: rec.homotopy_reward,
            next_state: env.global_state(),
        })?;
        Ok(rec)
    }

    pub(super) fn network(&self) -> &NetworkConfig {
        &self.network
    }
}

/// An independent learner at one SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct FdAgent {
    pub pair: ActorCriticPair,
    pub noise: OuNoise,
    pub buffer: ReplayBuffer,
}

/// One independent learner per SBS; they share only the reward.
#[derive(Debug, Clone, PartialEq)]
pub struct FdAgents {
    pub agents: Vec<FdAgent>,
}

impl FdAgents {
    pub fn new(cfg: &LearnerConfig, net: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (f, b) = (net.num_content, net.num_sbs);
        let agents = (0..b)
            .map(|_| {
                Ok(FdAgent {
                    pair: ActorCriticPair::new(&cfg.shape, local_obs_dim(f, b), f, 1, net.cache_capacity, rng)?,
                    noise: noise(cfg, f)?,
                    buffer: ReplayBuffer::new(cfg.buffer_capacity),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { agents })
    }

    pub fn greedy(&self, env: &Environment) -> Result<Vec<f64>> {
        let mut joint = Vec::new();
        for (b, agent) in self.agents.iter().enumerate() {
            joint.extend(agent.pair.act(&env.local_observation(b))?);
        }
        Ok(joint)
    }

    fn observe(env: &Environment) -> Vec<Vec<f64>> {
        (0..env.config().num_sbs)
            .map(|b| env.local_observation(b))
            .collect()
    }

    pub(super) fn train_epoch(
        &mut self,
        env: &mut Environment,
        cfg: &LearnerConfig,
        lr: LearningRates,
        rng: &mut ChaCha8Rng,
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = env.config().clone();
        let obs = Self::observe(env);
        let beta = self.agents[0].noise.beta();
        let mut actions = Vec::with_capacity(self.agents.len());
        for (agent, o) in self.agents.iter_mut().zip(&obs) {
            let greedy = agent.pair.act(o)?;
            actions.push(agent.noise.explore(&greedy, net.num_content, net.cache_capacity, rng));
        }
        // Each SBS reports the slack of the action it actually executes.
        let g: f64 = actions
            .iter()
            .map(|a| local_penalty(a, net.cache_capacity))
            .sum();
        let joint: Vec<f64> = actions.concat();
        let mut rec = execute(env, &joint, Phase::Train, FronthaulMeter::reward_sharing(&net))?;
        rec.beta = beta;
        rec.homotopy_reward = shape(rec.reward, g);
        let next = Self::observe(env);
        let mut losses = Vec::new();
        let mut sq_norm = 0.0;
        for (((agent, o), a), o2) in self.agents.iter_mut().zip(obs).zip(actions).zip(next) {
            agent.buffer.push(Experience {
                state: o,
                action: a,
                homotopy_reward: rec.homotopy_reward,
                next_state: o2,
            })?;
            if let Some((loss, norm)) = update_pair(&mut agent.pair, &agent.buffer, cfg, lr, rng)? {
                losses.push(loss);
                sq_norm += norm * norm;
            }
        }
        let stats = (!losses.is_empty())
            .then(|| (losses.iter().sum::<f64>() / losses.len() as f64, sq_norm.sqrt()));
        Ok(with_updates(rec, stats))
    }

    pub(super) fn store_transition(
        &mut self,
        env: &mut Environment,
        action: &[f64],
        shape: impl Fn(f64, f64) -> f64,
    ) -> Result<EpochRecord> {
        let net = env.config().clone();
        let obs = Self::observe(env);
        let g: f64 = action
            .chunks(net.num_content)
            .map(|a| local_penalty(a, net.cache_capacity))
            .sum();
        let mut rec = execute(env, action, Phase::Warmup, FronthaulMeter::reward_sharing(&net))?;
        rec.homotopy_reward = shape(rec.reward, g);
        let next = Self::observe(env);
        for (((agent, o), a), o2) in self
            .agents
            .iter_mut()
            .zip(obs)
            .zip(action.chunks(net.num_content))
            .zip(next)
        {
            agent.buffer.push(Experience {
                state: o,
                action: a.to_vec(),
                homotopy_reward: rec.homotopy_reward,
                next_state: o2,
            })?;
        }
        Ok(rec)
    }
}
