//! Goal-conditioned policies as action distributions.

use crate::mdp::{ActionId, GoalId, StateId};
use crate::rng::Rng;

/// A goal-conditioned, possibly time-dependent policy.
pub trait Policy {
    /// Writes `π(a | s, g_p)` into `out`, one entry per action.
    /// `steps_left` counts the steps remaining in the episode, including
    /// this one.
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]);
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        (**self).action_probs(s, g_p, steps_left, out)
    }
}

/// A deterministic policy given by a function.
pub struct FnPolicy<F>(pub F);

impl<F: Fn(StateId, GoalId, usize) -> ActionId> Policy for FnPolicy<F> {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[(self.0)(s, g_p, steps_left).0] = 1.0;
    }
}

/// Always the same action.
pub struct ConstantPolicy(pub ActionId);

impl Policy for ConstantPolicy {
    fn action_probs(&self, _: StateId, _: GoalId, _: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.0 .0] = 1.0;
    }
}

/// Mixes a base policy with uniform random actions.
pub struct EpsilonGreedy<P> {
    pub base: P,
    pub epsilon: f64,
}

impl<P: Policy> Policy for EpsilonGreedy<P> {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        self.base.action_probs(s, g_p, steps_left, out);
        let u = self.epsilon / out.len() as f64;
        for p in out.iter_mut() {
            *p = (1.0 - self.epsilon) * *p + u;
        }
    }
}

pub fn sample_action<P: Policy + ?Sized>(
    policy: &P,
    s: StateId,
    g_p: GoalId,
    steps_left: usize,
    scratch: &mut [f64],
    rng: &mut Rng,
) -> ActionId {
    policy.action_probs(s, g_p, steps_left, scratch);
    ActionId(rng.weighted_index(scratch))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
