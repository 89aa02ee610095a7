//! Experience replay, exploration and the Q-learning update.

mod learner;
mod replay;
mod schedule;

pub use learner::{
    act_epsilon_greedy, argmax, q_targets, sync_target, td_gradients, td_update, QLearningConfig,
    UpdateLoss,
};
pub use replay::{ReplayBuffer, Supervision, Transition};
pub use schedule::EpsilonSchedule;
