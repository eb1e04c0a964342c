use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{NetworkConfig, PopularityModel};
use crate::error::{check_len, Result};

/// Users active in one epoch: positions, requests and SBS connectivity.
///
/// Requests are 0-based item indices. `links[k * num_sbs + b]` is `e_{k,b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserBatch {
    num_sbs: usize,
    positions: Vec<[f64; 2]>,
    requests: Vec<usize>,
    links: Vec<bool>,
}

impl UserBatch {
    pub fn empty(num_sbs: usize) -> Self {
        Self {
            num_sbs,
            positions: Vec::new(),
            requests: Vec::new(),
            links: Vec::new(),
        }
    }

    /// Builds a batch from explicit rows, with no range test or user cap.
    pub fn from_parts(
        num_sbs: usize,
        positions: Vec<[f64; 2]>,
        requests: Vec<usize>,
        links: Vec<bool>,
    ) -> Result<Self> {
        check_len("user requests", positions.len(), requests.len())?;
        check_len("user connectivity", positions.len() * num_sbs, links.len())?;
        Ok(Self {
            num_sbs,
            positions,
            requests,
            links,
        })
    }

    /// Places users at `positions`, links them to every SBS within range and
    /// enforces the per-SBS cap in arrival order. Users left without any SBS
    /// are dropped.
    pub fn connect(
        config: &NetworkConfig,
        sbs: &[[f64; 2]],
        positions: &[[f64; 2]],
        requests: &[usize],
    ) -> Self {
        let b_count = sbs.len();
        let r2 = config.comm_radius_m * config.comm_radius_m;
        let mut load = vec![0usize; b_count];
        let mut batch = Self::empty(b_count);
        let mut row = vec![false; b_count];
        for (pos, &req) in positions.iter().zip(requests) {
            for (b, s) in sbs.iter().enumerate() {
                let dx = pos[0] - s[0];
                let dy = pos[1] - s[1];
                row[b] = dx * dx + dy * dy <= r2 && load[b] < config.max_users_per_sbs;
            }
            if row.iter().any(|&e| e) {
                for (b, &e) in row.iter().enumerate() {
                    load[b] += e as usize;
                }
                batch.positions.push(*pos);
                batch.requests.push(req);
                batch.links.extend_from_slice(&row);
            }
        }
        batch
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn requests(&self) -> &[usize] {
        &self.requests
    }

    pub fn connected(&self, k: usize, b: usize) -> bool {
        self.links[k * self.num_sbs + b]
    }

    pub fn links_of(&self, k: usize) -> &[bool] {
        &self.links[k * self.num_sbs..(k + 1) * self.num_sbs]
    }

    pub(crate) fn raw_links(&self) -> &[bool] {
        &self.links
    }

    /// Number of users linked to each SBS, `|K_b|`.
    pub fn load_per_sbs(&self) -> Vec<usize> {
        let mut load = vec![0; self.num_sbs];
        for k in 0..self.len() {
            for (b, &e) in self.links_of(k).iter().enumerate() {
                load[b] += e as usize;
            }
        }
        load
    }
}

/// Draws one epoch of users: a Poisson number of users placed uniformly in
/// the area, each requesting one item from the popularity law.
pub fn sample_users<R: Rng + ?Sized>(
    config: &NetworkConfig,
    sbs: &[[f64; 2]],
    popularity: &PopularityModel,
    rng: &mut R,
) -> UserBatch {
    let mean = config.ppp_density * config.area_side_m * config.area_side_m;
    let count = if mean > 0.0 {
        // Poisson::new only fails for non-positive or non-finite means.
        Poisson::new(mean).expect("valid Poisson mean").sample(rng) as usize
    } else {
        0
    };
    let cumulative: Vec<f64> = popularity
        .probabilities()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let last = cumulative.len() - 1;
    let mut positions = Vec::with_capacity(count);
    let mut requests = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random::<f64>() * config.area_side_m;
        let y = rng.random::<f64>() * config.area_side_m;
        let u: f64 = rng.random();
        let item = cumulative.iter().position(|&c| u < c).unwrap_or(last);
        positions.push([x, y]);
        requests.push(item);
    }
    UserBatch::connect(config, sbs, &positions, &requests)
}
