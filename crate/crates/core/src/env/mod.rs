//! Seeded discrete-epoch simulator of a small-cell network with MDS-coded
//! caches.
//!
//! Each epoch a Poisson number of users arrives, each requesting one item
//! from an evolving Zipf popularity law. Users link to every SBS within the
//! communication radius. The agents' joint action becomes the next cache
//! allocation, and the reward is the negated per-request fronthaul traffic
//! of updating the caches and serving the new users.

mod cache;
mod encode;
mod popularity;
mod snapshot;
mod users;

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cache::{
    check_feasible, compute_reward, compute_traffic_cost, CacheAllocation, TrafficCost,
    ACTION_TOLERANCE,
};
pub use encode::{
    encode_global_state, encode_local_observation, global_state_dim, local_from_global,
    local_obs_dim,
};
pub use popularity::{PopularityConfig, PopularityModel};
pub use users::{sample_users, UserBatch};

use crate::error::{check_len, Error, Result};

/// Static parameters of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub area_side_m: f64,
    pub num_sbs: usize,
    pub comm_radius_m: f64,
    /// Maximum number of users one SBS serves per epoch, `K`.
    pub max_users_per_sbs: usize,
    /// Users per square meter.
    pub ppp_density: f64,
    pub num_content: usize,
    /// Normalized storage per SBS, `L`, in item units.
    pub cache_capacity: f64,
    /// Item size `s`; all costs are reported in these units.
    pub content_size: f64,
    /// Distance between adjacent SBSs when `num_sbs` is not a perfect square.
    pub sbs_spacing_m: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            area_side_m: 1000.0,
            num_sbs: 4,
            comm_radius_m: 500.0,
            max_users_per_sbs: 100,
            ppp_density: 9.5e-5,
            num_content: 20,
            cache_capacity: 4.0,
            content_size: 1.0,
            sbs_spacing_m: 300.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(key, format!("must be positive, got {v}")))
            }
        };
        positive("area_side_m", self.area_side_m)?;
        positive("comm_radius_m", self.comm_radius_m)?;
        positive("content_size", self.content_size)?;
        positive("sbs_spacing_m", self.sbs_spacing_m)?;
        if self.num_sbs == 0 {
            return Err(Error::invalid("num_sbs", "at least one SBS is required"));
        }
        if self.num_content == 0 {
            return Err(Error::invalid("num_content", "catalog must not be empty"));
        }
        if self.max_users_per_sbs == 0 {
            return Err(Error::invalid("max_users_per_sbs", "must be at least 1"));
        }
        if !(self.ppp_density.is_finite() && self.ppp_density >= 0.0) {
            return Err(Error::invalid("ppp_density", "must be non-negative"));
        }
        if !(self.cache_capacity > 0.0 && self.cache_capacity <= self.num_content as f64) {
            return Err(Error::invalid(
                "cache_capacity",
                format!(
                    "must lie in (0, {}], got {}",
                    self.num_content, self.cache_capacity
                ),
            ));
        }
        let side = self.area_side_m;
        if place_sbs(self)
            .iter()
            .flatten()
            .any(|&c| !(0.0..=side).contains(&c))
        {
            return Err(Error::invalid(
                "num_sbs",
                format!(
                    "{} SBSs at {} m spacing do not fit in the area",
                    self.num_sbs, self.sbs_spacing_m
                ),
            ));
        }
        Ok(())
    }
}

/// SBS coordinates. A perfect-square count is laid out as a uniform grid of
/// cells centered in the area; any other count as a row-major grid with
/// `sbs_spacing_m` between neighbors, centered on the area.
pub fn place_sbs(config: &NetworkConfig) -> Vec<[f64; 2]> {
    let n = config.num_sbs;
    let side = config.area_side_m;
    let root = (n as f64).sqrt().round() as usize;
    if root * root == n {
        let cell = side / root as f64;
        let mut out = Vec::with_capacity(n);
        for i in 0..root {
            for j in 0..root {
                out.push([(i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell]);
            }
        }
        return out;
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let d = config.sbs_spacing_m;
    let x0 = side / 2.0 - (cols - 1) as f64 * d / 2.0;
    let y0 = side / 2.0 - (rows - 1) as f64 * d / 2.0;
    (0..n)
        .map(|i| [x0 + (i % cols) as f64 * d, y0 + (i / cols) as f64 * d])
        .collect()
}

/// Full system snapshot at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub epoch: u64,
    pub users: UserBatch,
    pub cache: CacheAllocation,
    pub(crate) popularity: PopularityModel,
    pub(crate) rng: ChaCha8Rng,
}

impl EnvState {
    /// Hash of the complete state, including the generator position.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.epoch.hash(&mut h);
        for p in self.users.positions() {
            p[0].to_bits().hash(&mut h);
            p[1].to_bits().hash(&mut h);
        }
        self.users.requests().hash(&mut h);
        self.users.raw_links().hash(&mut h);
        for x in self.cache.as_slice() {
            x.to_bits().hash(&mut h);
        }
        self.popularity.ranks.hash(&mut h);
        self.popularity.skewness.to_bits().hash(&mut h);
        self.rng.get_word_pos().hash(&mut h);
        h.finish()
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub cost: TrafficCost,
    pub reward: f64,
    /// Users of the new epoch, `|K^{t+1}|`.
    pub num_users: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    config: NetworkConfig,
    sbs: Vec<[f64; 2]>,
    state: EnvState,
}

impl Environment {
    /// Starts at epoch 0 with fully loaded uniform caches and a first batch
    /// of users.
    pub fn new(config: NetworkConfig, popularity: &PopularityConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        validate_popularity(popularity)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = PopularityModel::from_config(config.num_content, popularity, &mut rng);
        Self::with_popularity(config, model, rng)
    }

    /// Starts from an explicit popularity model.
    pub fn with_popularity(
        config: NetworkConfig,
        popularity: PopularityModel,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        check_len(
            "popularity catalog",
            config.num_content,
            popularity.num_content(),
        )?;
        let sbs = place_sbs(&config);
        let users = sample_users(&config, &sbs, &popularity, &mut rng);
        let cache =
            CacheAllocation::uniform(config.num_content, config.num_sbs, config.cache_capacity);
        Ok(Self {
            config,
            sbs,
            state: EnvState {
                epoch: 0,
                users,
                cache,
                popularity,
                rng,
            },
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn sbs_positions(&self) -> &[[f64; 2]] {
        &self.sbs
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn popularity(&self) -> &PopularityModel {
        &self.state.popularity
    }

    /// Replaces the current users, e.g. to force a load pattern in tests.
    pub fn set_users(&mut self, users: UserBatch) -> Result<()> {
        check_len("user connectivity", self.config.num_sbs, users.num_sbs())?;
        self.state.users = users;
        Ok(())
    }

    pub fn set_cache(&mut self, cache: CacheAllocation) -> Result<()> {
        check_len("cache content dimension", self.config.num_content, cache.num_content())?;
        check_len("cache SBS dimension", self.config.num_sbs, cache.num_sbs())?;
        cache.check_feasible(self.config.cache_capacity, 1e-9)?;
        self.state.cache = cache;
        Ok(())
    }

    pub fn global_state(&self) -> Vec<f64> {
        encode_global_state(&self.state, &self.config)
    }

    pub fn local_observation(&self, b: usize) -> Vec<f64> {
        encode_local_observation(&self.state, &self.config, b)
    }

    /// Executes a joint action (SBS-major, `num_sbs * num_content` entries):
    /// the caches take the action's values, popularity evolves, the next
    /// users arrive and are charged against the new caches.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        let cfg = &self.config;
        check_len("joint action", cfg.num_content * cfg.num_sbs, action.len())?;
        check_feasible(
            action,
            cfg.num_content,
            cfg.cache_capacity,
            ACTION_TOLERANCE,
        )?;
        let mut next = action.to_vec();
        for block in next.chunks_mut(cfg.num_content) {
            block.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            let sum: f64 = block.iter().sum();
            if sum > cfg.cache_capacity {
                let scale = cfg.cache_capacity / sum;
                block.iter_mut().for_each(|x| *x *= scale);
            }
        }
        let next = CacheAllocation::from_vec(cfg.num_content, cfg.num_sbs, next)?;

        let st = &mut self.state;
        let epoch = st.epoch + 1;
        st.popularity.evolve(epoch, &mut st.rng);
        let users = sample_users(cfg, &self.sbs, &st.popularity, &mut st.rng);
        let cost = compute_traffic_cost(&st.cache, &next, &users, cfg.content_size)?;
        let reward = compute_reward(cost.total, users.len(), cfg.content_size);
        let num_users = users.len();
        st.cache = next;
        st.users = users;
        st.epoch = epoch;
        Ok(StepOutcome {
            cost,
            reward,
            num_users,
        })
    }
}

pub(crate) fn validate_popularity(p: &PopularityConfig) -> Result<()> {
    if p.skew_choices.is_empty() {
        return Err(Error::invalid(
            "popularity.skew_choices",
            "at least one skewness value is required",
        ));
    }
    if p.skew_choices
        .iter()
        .chain(p.skewness.iter())
        .any(|k| k.is_nan() || *k < 0.0)
    {
        return Err(Error::invalid(
            "popularity.skewness",
            "skewness values must be non-negative",
        ));
    }
    Ok(())
}
