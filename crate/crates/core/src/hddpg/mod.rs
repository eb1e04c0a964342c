//! Homotopy DDPG: the action mapping and penalty, replay memory,
//! exploration noise, the penalty-weight schedule and the actor/critic
//! update rules. Plain DDPG is the same learner with the schedule disabled.

mod buffer;
mod homotopy;
mod learner;
mod mapping;
mod noise;

pub use buffer::{Experience, ReplayBuffer};
pub use homotopy::HomotopySchedule;
pub use learner::{
    ascend_actor, build_actor, build_critic, critic_loss_grad, fit_critic, policy_gradient,
    stack_rows, surrogate_objective, target_actions, ActorCriticPair, NetShape, TrackedNet,
};
pub use mapping::{
    homotopy_reward, local_penalty, map_action, map_action_jacobian, penalty, project_feasible,
};
pub use noise::OuNoise;
