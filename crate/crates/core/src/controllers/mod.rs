//! Control architectures: one centralized learner, a shared critic with
//! per-SBS actors, or fully independent per-SBS learners, plus the myopic
//! baselines. Every controller performs exactly one environment transition
//! per epoch and reports it as an [`EpochRecord`].

mod agents;
mod checkpoint;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{co_cu_decide, lo_cu_decide, rcu_decide, RequestStats, SubgradientConfig};
use crate::env::{Environment, NetworkConfig, UserBatch};
use crate::error::{Error, Result};
use crate::hddpg::{HomotopySchedule, NetShape};
use crate::nn::LrSchedule;

pub use agents::{CentralizedAgent, FdAgent, FdAgents, PdAgents};

/// RNG stream of learner randomness (initialization, noise, minibatches).
pub const LEARNER_STREAM: u64 = 1;
/// RNG stream of the random baseline.
pub const BASELINE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    Centralized,
    PartiallyDecentralized,
    FullyDecentralized,
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Centralized => "centralized",
            Self::PartiallyDecentralized => "partially-decentralized",
            Self::FullyDecentralized => "fully-decentralized",
        }
    }
}

/// Reward signal the learners store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// `R + lambda * g` under the annealed penalty weight.
    Homotopy,
    /// The environment reward alone.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    CoCu,
    LoCu,
    Rcu,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CoCu => "co-cu",
            Self::LoCu => "lo-cu",
            Self::Rcu => "rcu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Warmup,
    Train,
    Eval,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Warmup => "warmup",
            Self::Train => "train",
            Self::Eval => "eval",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warmup" => Ok(Self::Warmup),
            "train" => Ok(Self::Train),
            "eval" => Ok(Self::Eval),
            other => Err(Error::InvalidArgument(format!("unknown phase `{other}`"))),
        }
    }
}

/// Learner hyperparameters shared by all learning controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub shape: NetShape,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub lr_decay_power: f64,
    /// Epoch at which the learning rates reach zero; 0 keeps them constant.
    pub lr_horizon: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub tau: f64,
    pub gamma: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub beta_initial: f64,
    pub beta_decay: f64,
    pub beta_floor: f64,
    pub lambda_min: f64,
    pub homotopy_steps: usize,
    pub homotopy_period: u64,
    /// Pre-fill a tenth of the replay memory with cooperative-baseline
    /// transitions before training.
    pub warmup: bool,
}

impl LearnerConfig {
    pub fn actor_schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.actor_lr,
            power: self.lr_decay_power,
            horizon: self.lr_horizon,
        }
    }

    pub fn critic_schedule(&self) -> LrSchedule {
        LrSchedule {
            initial: self.critic_lr,
            power: self.lr_decay_power,
            horizon: self.lr_horizon,
        }
    }

    pub fn homotopy_schedule(&self, objective: Objective) -> Result<HomotopySchedule> {
        match objective {
            Objective::Plain => Ok(HomotopySchedule::disabled()),
            Objective::Homotopy => {
                HomotopySchedule::uniform(self.lambda_min, self.homotopy_steps, self.homotopy_period)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learner.batch_size", self.batch_size as f64),
            ("learner.buffer_capacity", self.buffer_capacity as f64),
            ("learner.ou_theta", self.ou_theta),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(key, "must be positive"));
            }
        }
        let non_negative = [
            ("learner.actor_lr", self.actor_lr),
            ("learner.critic_lr", self.critic_lr),
            ("learner.lr_decay_power", self.lr_decay_power),
            ("learner.ou_sigma", self.ou_sigma),
            ("learner.beta_initial", self.beta_initial),
            ("learner.beta_floor", self.beta_floor),
        ];
        for (key, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(key, "must be finite and non-negative"));
            }
        }
        let unit = [
            ("learner.tau", self.tau),
            ("learner.gamma", self.gamma),
            ("learner.beta_decay", self.beta_decay),
        ];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(key, "must lie in [0, 1]"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return Err(Error::invalid(
                "learner.batch_size",
                "cannot exceed learner.buffer_capacity",
            ));
        }
        if self.shape.actor_hidden.is_empty() || self.shape.actor_hidden.contains(&0) {
            return Err(Error::invalid("learner.actor_hidden", "needs positive layer widths"));
        }
        if self.shape.critic_hidden.is_empty() || self.shape.critic_hidden.contains(&0) {
            return Err(Error::invalid("learner.critic_hidden", "needs positive layer widths"));
        }
        self.homotopy_schedule(Objective::Homotopy)
            .map_err(|e| Error::invalid("learner.lambda_min", e.to_string()))?;
        Ok(())
    }
}

/// Per-epoch fronthaul dimension counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FronthaulMeter {
    /// Count with the users actually connected this epoch.
    pub actual: u64,
    /// Count with every SBS serving its maximum number of users.
    pub worst_case: u64,
}

impl FronthaulMeter {
    /// Requests, connectivity and decisions of every connected user plus one
    /// cache column per SBS.
    pub fn central(users: &UserBatch, config: &NetworkConfig) -> Self {
        let bf = (config.num_sbs * config.num_content) as u64;
        let links: usize = users.load_per_sbs().iter().sum();
        Self {
            actual: 3 * links as u64 + bf,
            worst_case: 3 * (config.num_sbs * config.max_users_per_sbs) as u64 + bf,
        }
    }

    /// One penalty value up and one shared reward down per SBS.
    pub fn reward_sharing(config: &NetworkConfig) -> Self {
        let v = 2 * config.num_sbs as u64;
        Self {
            actual: v,
            worst_case: v,
        }
    }
}

/// Everything observed about one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// Environment epoch at which the action was taken.
    pub epoch: u64,
    pub phase: Phase,
    pub reward: f64,
    /// Reward as stored for learning; equals `reward` when nothing is stored.
    pub homotopy_reward: f64,
    pub lambda: f64,
    pub beta: f64,
    pub update_cost: f64,
    pub miss_cost: f64,
    pub num_users: usize,
    pub meter: FronthaulMeter,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub critic_loss: Option<f64>,
    pub actor_grad_norm: Option<f64>,
    /// Largest violation of the per-SBS action space by the executed action
    /// (0 when feasible).
    pub action_violation: f64,
}

/// How far `action` lies outside `[0, 1]` entries with block sums at most
/// `capacity`.
pub fn action_violation(action: &[f64], num_content: usize, capacity: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for block in action.chunks(num_content) {
        for &x in block {
            if !x.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(-x).max(x - 1.0);
        }
        worst = worst.max(block.iter().sum::<f64>() - capacity);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum AgentSet {
    Centralized(CentralizedAgent),
    Pd(PdAgents),
    Fd(FdAgents),
}

/// A learning controller: agents, penalty schedule and learner randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    mode: ControlMode,
    objective: Objective,
    config: LearnerConfig,
    schedule: HomotopySchedule,
    rng: ChaCha8Rng,
    epochs_trained: u64,
    agents: AgentSet,
}

impl Learner {
    /// Builds the agents for `env`'s dimensions from the learner stream of
    /// `seed`.
    pub fn new(
        mode: ControlMode,
        objective: Objective,
        config: LearnerConfig,
        network: &NetworkConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(LEARNER_STREAM);
        let schedule = config.homotopy_schedule(objective)?;
        let agents = match mode {
            ControlMode::Centralized => {
                AgentSet::Centralized(CentralizedAgent::new(&config, network, &mut rng)?)
            }
            ControlMode::PartiallyDecentralized => {
                AgentSet::Pd(PdAgents::new(&config, network, &mut rng)?)
            }
            ControlMode::FullyDecentralized => {
                AgentSet::Fd(FdAgents::new(&config, network, &mut rng)?)
            }
        };
        Ok(Self {
            mode,
            objective,
            config,
            schedule,
            rng,
            epochs_trained: 0,
            agents,
        })
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn schedule(&self) -> &HomotopySchedule {
        &self.schedule
    }

    pub fn epochs_trained(&self) -> u64 {
        self.epochs_trained
    }

    pub fn centralized(&self) -> Option<&CentralizedAgent> {
        match &self.agents {
            AgentSet::Centralized(a) => Some(a),
            _ => None,
        }
    }

    pub fn partially_decentralized(&self) -> Option<&PdAgents> {
        match &self.agents {
            AgentSet::Pd(a) => Some(a),
            _ => None,
        }
    }

    pub fn fully_decentralized(&self) -> Option<&FdAgents> {
        match &self.agents {
            AgentSet::Fd(a) => Some(a),
            _ => None,
        }
    }

    /// Penalty weight applied to stored rewards (always 0 for the plain
    /// objective).
    pub fn lambda(&self) -> f64 {
        match self.objective {
            Objective::Plain => 0.0,
            Objective::Homotopy => self.schedule.lambda(),
        }
    }

    /// Greedy joint action for the current state.
    pub fn greedy_action(&self, env: &Environment) -> Result<Vec<f64>> {
        match &self.agents {
            AgentSet::Centralized(a) => a.greedy(env),
            AgentSet::Pd(a) => a.greedy(env),
            AgentSet::Fd(a) => a.greedy(env),
        }
    }

    /// One exploratory, learning epoch. The penalty weight advances after
    /// the updates.
    pub fn train_epoch(&mut self, env: &mut Environment) -> Result<EpochRecord> {
        let lambda = self.lambda();
        let objective = self.objective;
        let shape = move |r: f64, g: f64| shaped(objective, lambda, r, g);
        let actor_lr = self.config.actor_schedule().rate(self.epochs_trained);
        let critic_lr = self.config.critic_schedule().rate(self.epochs_trained);
        let lr = (actor_lr, critic_lr);
        let mut rec = match &mut self.agents {
            AgentSet::Centralized(a) => a.train_epoch(env, &self.config, lr, &mut self.rng, shape)?,
            AgentSet::Pd(a) => a.train_epoch(env, &self.config, lr, &mut self.rng, shape)?,
            AgentSet::Fd(a) => a.train_epoch(env, &self.config, lr, &mut self.rng, shape)?,
        };
        rec.lambda = lambda;
        rec.actor_lr = actor_lr;
        rec.critic_lr = critic_lr;
        self.epochs_trained += 1;
        self.schedule.step(self.epochs_trained);
        Ok(rec)
    }

    /// Fills a tenth of the replay memory with transitions driven by the
    /// cooperative baseline. Nothing is learned and no schedule advances.
    pub fn warmup(&mut self, env: &mut Environment) -> Result<Vec<EpochRecord>> {
        let n = self.config.buffer_capacity / 10;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let cfg = env.config().clone();
            let stats = RequestStats::from_users(&env.state().users, cfg.num_content);
            let action = co_cu_decide(
                &stats,
                env.state().cache.as_slice(),
                cfg.cache_capacity,
                SubgradientConfig::default(),
            )?;
            let lambda = self.lambda();
            let objective = self.objective;
            let shape = move |r: f64, g: f64| shaped(objective, lambda, r, g);
            let mut rec = match &mut self.agents {
                AgentSet::Centralized(a) => a.store_transition(env, &action, shape)?,
                AgentSet::Pd(a) => a.store_transition(env, &action, shape)?,
                AgentSet::Fd(a) => a.store_transition(env, &action, shape)?,
            };
            rec.lambda = lambda;
            out.push(rec);
        }
        Ok(out)
    }

    /// One greedy epoch without storage or updates.
    pub fn eval_epoch(&mut self, env: &mut Environment) -> Result<EpochRecord> {
        let action = self.greedy_action(env)?;
        let cfg = env.config().clone();
        let meter = match self.mode {
            ControlMode::Centralized => FronthaulMeter::central(&env.state().users, &cfg),
            _ => FronthaulMeter::default(),
        };
        let mut rec = execute(env, &action, Phase::Eval, meter)?;
        rec.lambda = self.lambda();
        Ok(rec)
    }
}

fn shaped(objective: Objective, lambda: f64, reward: f64, penalty: f64) -> f64 {
    match objective {
        Objective::Plain => reward,
        Objective::Homotopy => crate::hddpg::homotopy_reward(reward, penalty, lambda),
    }
}

/// Steps `env` with `action` and fills the environment part of a record.
pub(crate) fn execute(
    env: &mut Environment,
    action: &[f64],
    phase: Phase,
    meter: FronthaulMeter,
) -> Result<EpochRecord> {
    let cfg = env.config();
    let violation = action_violation(action, cfg.num_content, cfg.cache_capacity);
    let epoch = env.state().epoch;
    let out = env.step(action)?;
    Ok(EpochRecord {
        epoch,
        phase,
        reward: out.reward,
        homotopy_reward: out.reward,
        lambda: 0.0,
        beta: 0.0,
        update_cost: out.cost.update,
        miss_cost: out.cost.miss,
        num_users: out.num_users,
        meter,
        actor_lr: 0.0,
        critic_lr: 0.0,
        critic_loss: None,
        actor_grad_norm: None,
        action_violation: violation,
    })
}

/// A non-learning policy from the baselines module.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePolicy {
    kind: BaselineKind,
    rng: ChaCha8Rng,
    subgradient: SubgradientConfig,
}

impl BaselinePolicy {
    pub fn new(kind: BaselineKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(BASELINE_STREAM);
        Self {
            kind,
            rng,
            subgradient: SubgradientConfig::default(),
        }
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn decide(&mut self, env: &Environment) -> Result<Vec<f64>> {
        let cfg = env.config();
        let cache = env.state().cache.as_slice();
        let stats = || RequestStats::from_users(&env.state().users, cfg.num_content);
        match self.kind {
            BaselineKind::CoCu => co_cu_decide(&stats(), cache, cfg.cache_capacity, self.subgradient),
            BaselineKind::LoCu => lo_cu_decide(&stats(), cache, cfg.cache_capacity),
            BaselineKind::Rcu => Ok(rcu_decide(
                cfg.num_content,
                cfg.num_sbs,
                cfg.cache_capacity,
                &mut self.rng,
            )),
        }
    }

    /// The cooperative baseline gathers the same observations as the
    /// centralized learner; the others decide from local data only.
    pub fn meter(&self, env: &Environment) -> FronthaulMeter {
        match self.kind {
            BaselineKind::CoCu => FronthaulMeter::central(&env.state().users, env.config()),
            BaselineKind::LoCu | BaselineKind::Rcu => FronthaulMeter::default(),
        }
    }

    pub fn epoch(&mut self, env: &mut Environment, phase: Phase) -> Result<EpochRecord> {
        let action = self.decide(env)?;
        let meter = self.meter(env);
        execute(env, &action, phase, meter)
    }
}

/// Any controller the experiment runner can drive.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Learner(Box<Learner>),
    Baseline(BaselinePolicy),
}

impl Controller {
    pub fn run_epoch(&mut self, env: &mut Environment, phase: Phase) -> Result<EpochRecord> {
        match (self, phase) {
            (Self::Learner(l), Phase::Train) => l.train_epoch(env),
            (Self::Learner(l), Phase::Eval) => l.eval_epoch(env),
            (Self::Learner(_), Phase::Warmup) => Err(Error::InvalidArgument(
                "warm-up epochs run through Learner::warmup".into(),
            )),
            (Self::Baseline(b), phase) => b.epoch(env, phase),
        }
    }
}

/// Aggregates over a block of evaluation epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub epochs: usize,
    pub mean_reward: f64,
    /// Mean normalized fronthaul traffic, `-R`.
    pub mean_traffic: f64,
    pub reward_std: f64,
    pub mean_update_cost: f64,
    pub mean_miss_cost: f64,
    pub meter_total: u64,
    pub meter_worst_case_total: u64,
}

impl EvalSummary {
    pub fn from_records(records: &[EpochRecord]) -> Self {
        let n = records.len();
        if n == 0 {
            return Self {
                epochs: 0,
                mean_reward: 0.0,
                mean_traffic: 0.0,
                reward_std: 0.0,
                mean_update_cost: 0.0,
                mean_miss_cost: 0.0,
                meter_total: 0,
                meter_worst_case_total: 0,
            };
        }
        let nf = n as f64;
        let mean = records.iter().map(|r| r.reward).sum::<f64>() / nf;
        let var = records
            .iter()
            .map(|r| (r.reward - mean) * (r.reward - mean))
            .sum::<f64>()
            / nf;
        Self {
            epochs: n,
            mean_reward: mean,
            mean_traffic: -mean,
            reward_std: var.sqrt(),
            mean_update_cost: records.iter().map(|r| r.update_cost).sum::<f64>() / nf,
            mean_miss_cost: records.iter().map(|r| r.miss_cost).sum::<f64>() / nf,
            meter_total: records.iter().map(|r| r.meter.actual).sum(),
            meter_worst_case_total: records.iter().map(|r| r.meter.worst_case).sum(),
        }
    }
}

/// Runs `epochs` greedy evaluation epochs.
pub fn evaluate_policy(
    env: &mut Environment,
    controller: &mut Controller,
    epochs: usize,
) -> Result<(Vec<EpochRecord>, EvalSummary)> {
    let records = (0..epochs)
        .map(|_| controller.run_epoch(env, Phase::Eval))
        .collect::<Result<Vec<_>>>()?;
    let summary = EvalSummary::from_records(&records);
    Ok((records, summary))
}
