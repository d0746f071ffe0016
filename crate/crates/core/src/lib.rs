//! A tabular multi-goal reinforcement-learning lab.
//!
//! Environments are small enough to enumerate, so every learner can be
//! checked against exact dynamic-programming references: optimal values,
//! successor goal densities, and the conditional next-state law that
//! hindsight relabeling induces.

pub mod env;
pub mod agents;
pub mod density;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod replay;
pub mod rng;

pub use error::{Error, Result};
pub use mdp::{ActionId, GoalId, MdpSpec, MultiGoalMdp, StateId};
pub use rng::Rng;
