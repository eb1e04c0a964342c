//! Exhaustive finite-horizon search over a quantized action grid.

use crate::env::{compute_reward, compute_traffic_cost, CacheAllocation, UserBatch};
use crate::error::{Error, Result};

const MAX_SBS: usize = 2;
const MAX_CONTENT: usize = 3;
const MAX_HORIZON: usize = 3;
const MIN_STEP: f64 = 0.25;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TinyUser {
    pub item: usize,
    pub links: Vec<bool>,
}

/// A deterministic instance: `requests[t]` are the users served by the
/// action chosen at decision `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyMdp {
    pub num_content: usize,
    pub num_sbs: usize,
    pub capacity: f64,
    pub content_size: f64,
    pub grid_step: f64,
    pub initial_cache: Vec<f64>,
    pub requests: Vec<Vec<TinyUser>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best undiscounted sum of per-epoch rewards.
    pub optimal_return: f64,
    /// Every optimal action sequence; each holds one joint action per epoch.
    pub optimizers: Vec<Vec<Vec<f64>>>,
}

impl OracleResult {
    /// An optimizer whose every action fills every SBS's storage.
    pub fn full_storage_optimizer(&self, mdp: &TinyMdp) -> Option<&Vec<Vec<f64>>> {
        self.optimizers.iter().find(|seq| {
            seq.iter().all(|a| {
                a.chunks(mdp.num_content)
                    .all(|col| (col.iter().sum::<f64>() - mdp.capacity).abs() < TIE_TOL)
            })
        })
    }
}

impl TinyMdp {
    fn validate(&self) -> Result<usize> {
        let too_large = |what: String| Err(Error::OracleTooLarge(what));
        if self.num_sbs == 0 || self.num_sbs > MAX_SBS {
            return too_large(format!("{} SBSs (limit {MAX_SBS})", self.num_sbs));
        }
        if self.num_content == 0 || self.num_content > MAX_CONTENT {
            return too_large(format!("{} items (limit {MAX_CONTENT})", self.num_content));
        }
        if self.requests.is_empty() || self.requests.len() > MAX_HORIZON {
            return too_large(format!("horizon {} (limit 1..={MAX_HORIZON})", self.requests.len()));
        }
        if !(self.grid_step >= MIN_STEP) || self.grid_step > 1.0 {
            return too_large(format!("grid step {} (minimum {MIN_STEP})", self.grid_step));
        }
        let steps = (1.0 / self.grid_step).round();
        if ((1.0 / self.grid_step) - steps).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "grid step {} does not divide 1",
                self.grid_step
            )));
        }
        crate::env::check_feasible(&self.initial_cache, self.num_content, self.capacity, 1e-9)?;
        if self.initial_cache.len() != self.num_content * self.num_sbs {
            return Err(Error::DimensionMismatch {
                context: "initial cache",
                expected: self.num_content * self.num_sbs,
                actual: self.initial_cache.len(),
            });
        }
        for users in &self.requests {
            for u in users {
                if u.item >= self.num_content || u.links.len() != self.num_sbs {
                    return Err(Error::InvalidArgument("malformed tiny user".into()));
                }
            }
        }
        Ok(steps as usize)
    }

    fn batch(&self, t: usize) -> Result<UserBatch> {
        let users = &self.requests[t];
        UserBatch::from_parts(
            self.num_sbs,
            vec![[0.0, 0.0]; users.len()],
            users.iter().map(|u| u.item).collect(),
            users.iter().flat_map(|u| u.links.iter().copied()).collect(),
        )
    }

    /// Reward of moving from `prev` to `next` and serving epoch `t`'s users,
    /// evaluated by the environment's cost function.
    pub fn step_reward(&self, prev: &[f64], next: &[f64], t: usize) -> Result<f64> {
        let f = self.num_content;
        let b = self.num_sbs;
        let prev = CacheAllocation::from_vec(f, b, prev.to_vec())?;
        let next = CacheAllocation::from_vec(f, b, next.to_vec())?;
        let users = self.batch(t)?;
        let cost = compute_traffic_cost(&prev, &next, &users, self.content_size)?;
        Ok(compute_reward(cost.total, users.len(), self.content_size))
    }

    /// Sum of step rewards along `actions`, starting from the initial cache.
    pub fn sequence_return(&self, actions: &[Vec<f64>]) -> Result<f64> {
        let mut prev = self.initial_cache.clone();
        let mut total = 0.0;
        for (t, a) in actions.iter().enumerate() {
            total += self.step_reward(&prev, a, t)?;
            prev = a.clone();
        }
        Ok(total)
    }
}

fn joint_grid(f_count: usize, b_count: usize, steps: usize, capacity: f64) -> Vec<Vec<f64>> {
    let mut column = Vec::new();
    let mut idx = vec![0usize; f_count];
    'outer: loop {
        let v: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
        if v.iter().sum::<f64>() <= capacity + TIE_TOL {
            column.push(v);
        }
        for d in 0..f_count {
            if idx[d] < steps {
                idx[d] += 1;
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    let mut joint: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..b_count {
        joint = joint
            .into_iter()
            .flat_map(|prefix| {
                column.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.extend_from_slice(c);
                    p
                })
            })
            .collect();
    }
    joint
}

/// Optimal return and all optimal action sequences over the grid of joint
/// actions with entries in multiples of `grid_step`. Fails on instances
/// beyond the size limits or when more than `max_optimizers` ties exist.
pub fn brute_force_oracle(mdp: &TinyMdp, max_optimizers: usize) -> Result<OracleResult> {
    let steps = mdp.validate()?;
    let grid = joint_grid(mdp.num_content, mdp.num_sbs, steps, mdp.capacity);
    let horizon = mdp.requests.len();
    let n = grid.len();

    // Rewards split into the update part (depends on both endpoints) and the
    // miss part (depends on the action and the epoch).
    let mut served = vec![vec![0.0; n]; horizon];
    for (t, row) in served.iter_mut().enumerate() {
        for (i, a) in grid.iter().enumerate() {
            row[i] = mdp.step_reward(a, a, t)?;
        }
    }
    let norm: Vec<f64> = mdp
        .requests
        .iter()
        .map(|u| u.len().max(1) as f64)
        .collect();
    let update = |prev: &[f64], next: &[f64]| -> f64 {
        prev.iter().zip(next).map(|(p, q)| (q - p).max(0.0)).sum::<f64>()
    };
    let reward = |t: usize, prev: &[f64], i: usize| served[t][i] - update(prev, &grid[i]) / norm[t];

    // value[t][i]: best return of epochs t.. when the cache before epoch t
    // is grid point i.
    let mut value = vec![vec![0.0; n]; horizon + 1];
    for t in (1..horizon).rev() {
        for s in 0..n {
            value[t][s] = (0..n)
                .map(|i| reward(t, &grid[s], i) + value[t + 1][i])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let first: Vec<f64> = (0..n)
        .map(|i| reward(0, &mdp.initial_cache, i) + value[1][i])
        .collect();
    let optimal_return = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut optimizers = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = (0..n)
        .filter(|&i| first[i] >= optimal_return - TIE_TOL)
        .map(|i| (1, vec![i]))
        .collect();
    while let Some((t, path)) = stack.pop() {
        if t == horizon {
            if optimizers.len() == max_optimizers {
                return Err(Error::OracleTooLarge(format!(
                    "more than {max_optimizers} optimal sequences"
                )));
            }
            optimizers.push(path.iter().map(|&i| grid[i].clone()).collect());
            continue;
        }
        let s = *path.last().expect("non-empty path");
        for i in 0..n {
            if reward(t, &grid[s], i) + value[t + 1][i] >= value[t][s] - TIE_TOL {
                let mut next = path.clone();
                next.push(i);
                stack.push((t + 1, next));
            }
        }
    }
    Ok(OracleResult {
        optimal_return,
        optimizers,
    })
}
