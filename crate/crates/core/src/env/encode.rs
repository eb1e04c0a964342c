//! Fixed-size numeric encodings of the state and of per-SBS observations.
//!
//! The global vector holds the demand tensor `D[f, b, b']` followed by the
//! cache matrix. `D[f, b, b']` counts users linked to SBS `b` that request
//! item `f` and are also linked to `b'`, divided by `K`. The demand block is
//! stored with `b` outermost, so the observation of SBS `b` (its demand
//! slice and its own cache column) is a pair of contiguous sub-blocks of the
//! global vector.

use super::{EnvState, NetworkConfig};

pub fn global_state_dim(num_content: usize, num_sbs: usize) -> usize {
    num_content * num_sbs * num_sbs + num_content * num_sbs
}

pub fn local_obs_dim(num_content: usize, num_sbs: usize) -> usize {
    num_content * num_sbs + num_content
}

pub fn encode_global_state(state: &EnvState, config: &NetworkConfig) -> Vec<f64> {
    let f_count = config.num_content;
    let b_count = config.num_sbs;
    let unit = 1.0 / config.max_users_per_sbs as f64;
    let mut out = vec![0.0; global_state_dim(f_count, b_count)];
    let users = &state.users;
    for (k, &f) in users.requests().iter().enumerate() {
        let links = users.links_of(k);
        for (b, _) in links.iter().enumerate().filter(|(_, &e)| e) {
            let base = b * f_count * b_count + f * b_count;
            for (b2, _) in links.iter().enumerate().filter(|(_, &e)| e) {
                out[base + b2] += unit;
            }
        }
    }
    let demand_len = f_count * b_count * b_count;
    out[demand_len..].copy_from_slice(state.cache.as_slice());
    out
}

pub fn encode_local_observation(state: &EnvState, config: &NetworkConfig, b: usize) -> Vec<f64> {
    local_from_global(
        &encode_global_state(state, config),
        b,
        config.num_content,
        config.num_sbs,
    )
}

/// Extracts the observation of SBS `b` from a global state vector.
pub fn local_from_global(global: &[f64], b: usize, num_content: usize, num_sbs: usize) -> Vec<f64> {
    let slice = num_content * num_sbs;
    let demand_len = slice * num_sbs;
    let mut out = Vec::with_capacity(local_obs_dim(num_content, num_sbs));
    out.extend_from_slice(&global[b * slice..(b + 1) * slice]);
    let cache = demand_len + b * num_content;
    out.extend_from_slice(&global[cache..cache + num_content]);
    out
}
