//! Myopic comparison policies and a brute-force oracle for tiny instances.
//!
//! All decisions use the SBS-major joint layout `b * F + f` of
//! [`CacheAllocation`](crate::env::CacheAllocation).

mod oracle;

use rand::Rng;

use crate::env::UserBatch;
use crate::error::{check_len, Result};

pub use oracle::{brute_force_oracle, OracleResult, TinyMdp, TinyUser};

/// One epoch's observed requests: per-SBS counts plus each user's item and
/// connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestStats {
    num_content: usize,
    num_sbs: usize,
    counts: Vec<u32>,
    users: Vec<(usize, Vec<bool>)>,
}

impl RequestStats {
    pub fn from_users(users: &UserBatch, num_content: usize) -> Self {
        let num_sbs = users.num_sbs();
        let list = users
            .requests()
            .iter()
            .enumerate()
            .map(|(k, &f)| (f, users.links_of(k).to_vec()))
            .collect();
        Self::from_requests(num_content, num_sbs, list)
    }

    /// `users` holds `(item, links)` with one link flag per SBS.
    pub fn from_requests(num_content: usize, num_sbs: usize, users: Vec<(usize, Vec<bool>)>) -> Self {
        let mut counts = vec![0; num_content * num_sbs];
        for (f, links) in &users {
            assert!(*f < num_content && links.len() == num_sbs, "malformed request");
            for (b, _) in links.iter().enumerate().filter(|(_, l)| **l) {
                counts[b * num_content + f] += 1;
            }
        }
        Self {
            num_content,
            num_sbs,
            counts,
            users,
        }
    }

    pub fn num_content(&self) -> usize {
        self.num_content
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    /// Requests for item `f` received by SBS `b`.
    pub fn count(&self, f: usize, b: usize) -> u32 {
        self.counts[b * self.num_content + f]
    }

    pub fn column(&self, b: usize) -> &[u32] {
        &self.counts[b * self.num_content..(b + 1) * self.num_content]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

/// Per-SBS empirical request distribution; an SBS without requests gets the
/// uniform distribution.
pub fn estimate_local_popularity(stats: &RequestStats) -> Vec<f64> {
    let f_count = stats.num_content;
    let mut out = Vec::with_capacity(stats.counts.len());
    for b in 0..stats.num_sbs {
        let col = stats.column(b);
        let total: u32 = col.iter().sum();
        if total == 0 {
            out.extend(std::iter::repeat_n(1.0 / f_count as f64, f_count));
        } else {
            out.extend(col.iter().map(|&n| n as f64 / total as f64));
        }
    }
    out
}

/// Myopic cost of switching from `current` to `action` and serving the
/// observed users with it, in units of the item size.
pub fn cache_update_objective(stats: &RequestStats, current: &[f64], action: &[f64]) -> f64 {
    let f_count = stats.num_content;
    let update: f64 = action
        .iter()
        .zip(current)
        .map(|(a, l)| (a - l).max(0.0))
        .sum();
    let miss: f64 = stats
        .users
        .iter()
        .map(|(f, links)| {
            let got: f64 = links
                .iter()
                .enumerate()
                .filter(|(_, l)| **l)
                .map(|(b, _)| action[b * f_count + f])
                .sum();
            (1.0 - got).max(0.0)
        })
        .sum();
    update + miss
}

/// Projected subgradient settings for the cooperative baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientConfig {
    pub iterations: usize,
    /// Step at iteration `i` is `step_scale / sqrt(i)` along the
    /// unit-norm subgradient.
    pub step_scale: f64,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            step_scale: 0.5,
        }
    }
}

fn objective_subgradient(stats: &RequestStats, current: &[f64], action: &[f64], grad: &mut [f64]) {
    let f_count = stats.num_content;
    for ((g, a), l) in grad.iter_mut().zip(action).zip(current) {
        *g = if a > l { 1.0 } else { 0.0 };
    }
    for (f, links) in &stats.users {
        let got: f64 = links
            .iter()
            .enumerate()
            .filter(|(_, l)| **l)
            .map(|(b, _)| action[b * f_count + f])
            .sum();
        if got < 1.0 {
            for (b, _) in links.iter().enumerate().filter(|(_, l)| **l) {
                grad[b * f_count + f] -= 1.0;
            }
        }
    }
}

/// Euclidean projection of each `block`-sized chunk onto
/// `{0 <= x <= 1, sum x <= capacity}`: clip, and if the budget is still
/// exceeded, shift the chunk down by the threshold that meets it exactly.
pub fn project_capped_simplex(x: &mut [f64], block: usize, capacity: f64) {
    for chunk in x.chunks_mut(block) {
        let clipped_sum: f64 = chunk.iter().map(|v| v.clamp(0.0, 1.0)).sum();
        if clipped_sum <= capacity {
            chunk.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            continue;
        }
        let shifted_sum = |t: f64| chunk.iter().map(|v| (v - t).clamp(0.0, 1.0)).sum::<f64>();
        // shifted_sum is non-increasing in t: above the budget at lo, at or
        // below it at hi.
        let mut lo = 0.0;
        let mut hi = chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if shifted_sum(mid) > capacity {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        chunk.iter_mut().for_each(|v| *v = (*v - hi).clamp(0.0, 1.0));
    }
}

/// Cooperative cache update: projected subgradient descent on
/// [`cache_update_objective`] over the joint action, starting from the
/// current cache. Returns the best iterate seen.
pub fn co_cu_decide(stats: &RequestStats, current: &[f64], capacity: f64, cfg: SubgradientConfig) -> Result<Vec<f64>> {
    let f_count = stats.num_content;
    check_len("current cache", f_count * stats.num_sbs, current.len())?;
    let mut x = current.to_vec();
    project_capped_simplex(&mut x, f_count, capacity);
    let mut best = x.clone();
    let mut best_val = cache_update_objective(stats, current, &best);
    let mut grad = vec![0.0; x.len()];
    for i in 1..=cfg.iterations {
        objective_subgradient(stats, current, &x, &mut grad);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = cfg.step_scale / (i as f64).sqrt() / norm;
        for (xi, g) in x.iter_mut().zip(&grad) {
            *xi -= step * g;
        }
        project_capped_simplex(&mut x, f_count, capacity);
        let val = cache_update_objective(stats, current, &x);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&x);
        }
    }
    Ok(best)
}

/// Exact minimizer of one SBS's share of the objective when it ignores the
/// other SBSs: per item, storage below the current level is worth its
/// request count and storage above it is worth one unit less, so the budget
/// goes greedily to the most valuable positive segments.
pub fn lo_cu_decide_sbs(counts: &[u32], current: &[f64], capacity: f64) -> Result<Vec<f64>> {
    check_len("current cache column", counts.len(), current.len())?;
    // (value, item, width); lower segments of an item are always listed
    // before its upper segment at equal value.
    let mut segments: Vec<(f64, usize, usize, f64)> = Vec::with_capacity(2 * counts.len());
    for (f, (&n, &l)) in counts.iter().zip(current).enumerate() {
        let l = l.clamp(0.0, 1.0);
        if l > 0.0 {
            segments.push((n as f64, f, 0, l));
        }
        if l < 1.0 {
            segments.push((n as f64 - 1.0, f, 1, 1.0 - l));
        }
    }
    segments.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![0.0; counts.len()];
    let mut left = capacity;
    for (value, f, _, width) in segments {
        if value <= 0.0 || left <= 0.0 {
            break;
        }
        let take = width.min(left);
        out[f] += take;
        left -= take;
    }
    Ok(out)
}

/// Local cache update: every SBS runs [`lo_cu_decide_sbs`] on its own
/// request counts.
pub fn lo_cu_decide(stats: &RequestStats, current: &[f64], capacity: f64) -> Result<Vec<f64>> {
    let f_count = stats.num_content;
    check_len("current cache", f_count * stats.num_sbs, current.len())?;
    let mut out = Vec::with_capacity(current.len());
    for b in 0..stats.num_sbs {
        out.extend(lo_cu_decide_sbs(
            stats.column(b),
            &current[b * f_count..(b + 1) * f_count],
            capacity,
        )?);
    }
    Ok(out)
}

/// Scales `weights` by the `c` for which `sum min(1, c w) = capacity` and
/// returns the clipped vector. All ones when the capacity covers the catalog.
pub fn water_fill(weights: &[f64], capacity: f64) -> Vec<f64> {
    let n = weights.len();
    if capacity >= n as f64 {
        return vec![1.0; n];
    }
    let mut clipped = vec![false; n];
    loop {
        let free: f64 = weights
            .iter()
            .zip(&clipped)
            .filter(|(_, c)| !**c)
            .map(|(w, _)| w)
            .sum();
        let full = clipped.iter().filter(|c| **c).count() as f64;
        let scale = (capacity - full) / free;
        let mut changed = false;
        for (w, c) in weights.iter().zip(clipped.iter_mut()) {
            if !*c && scale * w >= 1.0 {
                *c = true;
                changed = true;
            }
        }
        if !changed {
            return weights
                .iter()
                .zip(&clipped)
                .map(|(w, c)| if *c { 1.0 } else { scale * w })
                .collect();
        }
    }
}

/// Random cache update: each SBS fills its storage exactly, in proportion
/// to fresh uniform weights.
pub fn rcu_decide<R: Rng + ?Sized>(num_content: usize, num_sbs: usize, capacity: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(num_content * num_sbs);
    for _ in 0..num_sbs {
        // Open interval keeps every weight positive.
        let w: Vec<f64> = (0..num_content)
            .map(|_| rng.random_range(f64::EPSILON..1.0))
            .collect();
        out.extend(water_fill(&w, capacity));
    }
    out
}
