//! Action mapping, storage-slack penalty and homotopy reward.

/// `min(1, x)` elementwise: maps a softmax-scaled proto-action into the
/// per-SBS action space.
pub fn map_action(proto: &[f64]) -> Vec<f64> {
    proto.iter().map(|&x| x.min(1.0)).collect()
}

/// Diagonal of the Jacobian of [`map_action`]: 1 below the clip threshold,
/// 0 at or above it.
pub fn map_action_jacobian(proto: &[f64]) -> Vec<f64> {
    proto
        .iter()
        .map(|&x| if x < 1.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Re-projects a perturbed action: clip to `[0, 1]`, then shrink every
/// over-budget block of `block` entries by `capacity / sum`.
pub fn project_feasible(action: &mut [f64], block: usize, capacity: f64) {
    for chunk in action.chunks_mut(block) {
        chunk.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        let sum: f64 = chunk.iter().sum();
        if sum > capacity {
            let scale = capacity / sum;
            chunk.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

/// Unused storage across all SBSs after mapping: `B L - ||a||_1`.
pub fn penalty(mapped: &[f64], num_sbs: usize, capacity: f64) -> f64 {
    num_sbs as f64 * capacity - mapped.iter().map(|x| x.abs()).sum::<f64>()
}

/// Unused storage of one SBS: `L - ||a_b||_1`.
pub fn local_penalty(mapped: &[f64], capacity: f64) -> f64 {
    penalty(mapped, 1, capacity)
}

/// `R + lambda * g`, where `g` is the penalty of the previous state.
pub fn homotopy_reward(reward: f64, penalty: f64, lambda: f64) -> f64 {
    reward + lambda * penalty
}
