use super::UserBatch;
use crate::error::{check_len, Error, Result};

/// Tolerance on executed actions before they are rejected.
pub const ACTION_TOLERANCE: f64 = 1e-6;

/// Fractions of MDS parity bits of each item stored at each SBS.
///
/// Stored SBS-major: entry `(f, b)` lives at `b * num_content + f`, which is
/// also the layout of joint actions.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheAllocation {
    num_content: usize,
    num_sbs: usize,
    fractions: Vec<f64>,
}

impl CacheAllocation {
    pub fn zeros(num_content: usize, num_sbs: usize) -> Self {
        Self {
            num_content,
            num_sbs,
            fractions: vec![0.0; num_content * num_sbs],
        }
    }

    /// Every SBS spreads its storage evenly over the catalog (fully loaded).
    pub fn uniform(num_content: usize, num_sbs: usize, capacity: f64) -> Self {
        let v = (capacity / num_content as f64).min(1.0);
        Self {
            num_content,
            num_sbs,
            fractions: vec![v; num_content * num_sbs],
        }
    }

    pub fn from_vec(num_content: usize, num_sbs: usize, fractions: Vec<f64>) -> Result<Self> {
        check_len("cache allocation", num_content * num_sbs, fractions.len())?;
        Ok(Self {
            num_content,
            num_sbs,
            fractions,
        })
    }

    pub fn num_content(&self) -> usize {
        self.num_content
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn get(&self, f: usize, b: usize) -> f64 {
        self.fractions[b * self.num_content + f]
    }

    pub fn column(&self, b: usize) -> &[f64] {
        &self.fractions[b * self.num_content..(b + 1) * self.num_content]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.fractions
    }

    /// Checks the per-SBS action space: entries in `[0, 1]`, column sums at
    /// most `capacity`, both within `tol`.
    pub fn check_feasible(&self, capacity: f64, tol: f64) -> Result<()> {
        check_feasible(&self.fractions, self.num_content, capacity, tol)
    }
}

/// Validates a flat joint action against the per-SBS action space.
pub fn check_feasible(action: &[f64], num_content: usize, capacity: f64, tol: f64) -> Result<()> {
    for (b, block) in action.chunks(num_content).enumerate() {
        if let Some(x) = block
            .iter()
            .find(|x| !x.is_finite() || **x < -tol || **x > 1.0 + tol)
        {
            return Err(Error::InfeasibleAction {
                sbs: b,
                reason: format!("fraction {x} outside [0, 1]"),
            });
        }
        let sum: f64 = block.iter().sum();
        if sum > capacity + tol {
            return Err(Error::InfeasibleAction {
                sbs: b,
                reason: format!("stored {sum} exceeds capacity {capacity}"),
            });
        }
    }
    Ok(())
}

/// Fronthaul traffic of one transition, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficCost {
    pub update: f64,
    pub miss: f64,
    pub total: f64,
}

/// Traffic spent moving from `prev` to `next` plus the traffic needed to
/// complete the requests of `users` that the linked caches cannot serve.
pub fn compute_traffic_cost(
    prev: &CacheAllocation,
    next: &CacheAllocation,
    users: &UserBatch,
    content_size: f64,
) -> Result<TrafficCost> {
    check_len("cache content dimension", prev.num_content, next.num_content)?;
    check_len("cache SBS dimension", prev.num_sbs, next.num_sbs)?;
    check_len("user connectivity", next.num_sbs, users.num_sbs())?;
    let update_units: f64 = prev
        .fractions
        .iter()
        .zip(&next.fractions)
        .map(|(old, new)| (new - old).max(0.0))
        .sum();
    let mut miss_units = 0.0;
    for (k, &f) in users.requests().iter().enumerate() {
        let served: f64 = users
            .links_of(k)
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(b, _)| next.get(f, b))
            .sum();
        miss_units += (1.0 - served).max(0.0);
    }
    let update = update_units * content_size;
    let miss = miss_units * content_size;
    Ok(TrafficCost {
        update,
        miss,
        total: update + miss,
    })
}

/// Per-request normalized reward `-C / (|K| s)`. An epoch without users is
/// normalized as if one user were present.
pub fn compute_reward(total_cost: f64, num_users: usize, content_size: f64) -> f64 {
    let r = -total_cost / (num_users.max(1) as f64 * content_size);
    // Keeps a cost-free epoch at +0.0 so rewards compare bitwise.
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
