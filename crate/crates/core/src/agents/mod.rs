//! Q-learning, HER and importance-weighted hindsight learners.

mod agent;
mod config;
mod qtable;
mod update;

pub use crate::density::compute_w;
pub use agent::{Agent, EpisodeSummary};
pub use config::{AgentKind, DensityPolicy, LearnerConfig};
pub use qtable::{Behavior, Greedy, QLayout, QTable};
pub use update::{
    behavior_action, clip_ratio, density_policy, greedy_action, her_update, q_update_vanilla, usher_update,
    usher_weight,
};
