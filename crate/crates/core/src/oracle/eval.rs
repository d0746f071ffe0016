//! Monte-Carlo evaluation of policies and value predictions.

use serde::{Deserialize, Serialize};

use crate::mdp::{GoalId, MultiGoalMdp, StateId};
use crate::policy::{sample_action, Policy};
use crate::rng::Rng;

/// One rollout until the pursued goal is reached, an absorbing state is
/// entered, or the horizon runs out.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub g_p: GoalId,
    pub start: StateId,
    pub success: bool,
    pub discounted_return: f64,
    /// States entered after the start, in order.
    pub visited: Vec<StateId>,
}

pub fn rollout(mdp: &MultiGoalMdp, policy: &dyn Policy, rng: &mut Rng) -> Rollout {
    let g_p = mdp.sample_policy_goal(rng);
    let start = mdp.sample_start(rng);
    let mut probs = vec![0.0; mdp.num_actions()];
    let mut out = Rollout {
        g_p,
        start,
        success: false,
        discounted_return: 0.0,
        visited: Vec::new(),
    };
    let mut s = start;
    let horizon = mdp.horizon();
    for step in 0..horizon {
        let a = sample_action(policy, s, g_p, horizon - step, &mut probs, rng);
        s = mdp.step(s, a, rng);
        out.visited.push(s);
        if mdp.goal_of(s) == g_p {
            out.success = true;
            out.discounted_return = mdp.discount().powi(step as i32);
            break;
        }
        if mdp.is_terminal(s) {
            break;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    /// How often each state was entered, summed over episodes.
    pub state_visits: Vec<u64>,
}

pub fn evaluate_policy(
    mdp: &MultiGoalMdp,
    policy: &dyn Policy,
    n_episodes: usize,
    rng: &mut Rng,
) -> EvalReport {
    let mut visits = vec![0u64; mdp.num_states()];
    let (mut successes, mut total) = (0usize, 0.0);
    for _ in 0..n_episodes {
        let r = rollout(mdp, policy, rng);
        successes += r.success as usize;
        total += r.discounted_return;
        for s in r.visited {
            visits[s.0] += 1;
        }
    }
    let n = n_episodes.max(1) as f64;
    EvalReport {
        episodes: n_episodes,
        success_rate: successes as f64 / n,
        mean_return: total / n,
        state_visits: visits,
    }
}

/// The path a policy follows from `start` when every step lands on its
/// most likely successor (lowest index on ties), up to the horizon, the
/// goal or an absorbing state. Includes `start`.
pub fn nominal_path(mdp: &MultiGoalMdp, policy: &dyn Policy, start: StateId, g_p: GoalId) -> Vec<StateId> {
    let mut probs = vec![0.0; mdp.num_actions()];
    let mut path = vec![start];
    let mut s = start;
    let horizon = mdp.horizon();
    for step in 0..horizon {
        if (step > 0 && mdp.goal_of(s) == g_p) || mdp.is_terminal(s) {
            break;
        }
        policy.action_probs(s, g_p, horizon - step, &mut probs);
        let a = crate::policy::argmax(probs.iter().copied());
        let row = mdp.row(s, crate::mdp::ActionId(a));
        let mut best = row[0];
        for &o in &row[1..] {
            if o.1 > best.1 {
                best = o;
            }
        }
        s = best.0;
        path.push(s);
    }
    path
}

/// Start-state bias: mean predicted start value minus mean realized
/// discounted return, so overestimation is positive.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub episodes: usize,
    pub mean_return: f64,
    pub mean_prediction: f64,
    pub bias: f64,
    /// 95% normal-approximation half-width of `bias`.
    pub ci_half_width: f64,
}

pub fn bias_estimate(
    predict: &dyn Fn(StateId, GoalId) -> f64,
    mdp: &MultiGoalMdp,
    policy: &dyn Policy,
    n_episodes: usize,
    rng: &mut Rng,
) -> BiasReport {
    let (mut sum_pred, mut sum_ret) = (0.0, 0.0);
    let (mut sum_d, mut sum_d2) = (0.0, 0.0);
    for _ in 0..n_episodes {
        let r = rollout(mdp, policy, rng);
        let pred = predict(r.start, r.g_p);
        let d = pred - r.discounted_return;
        sum_pred += pred;
        sum_ret += r.discounted_return;
        sum_d += d;
        sum_d2 += d * d;
    }
    let n = n_episodes.max(1) as f64;
    let mean = sum_d / n;
    let var = if n_episodes > 1 {
        ((sum_d2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    BiasReport {
        episodes: n_episodes,
        mean_return: sum_ret / n,
        mean_prediction: sum_pred / n,
        bias: mean,
        ci_half_width: 1.96 * (var / n).sqrt(),
    }
}
