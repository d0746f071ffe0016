//! Single-sample update rules.

use crate::density::{compute_w, DensityMode, FTable, SampledUpdate};
use crate::error::{Error, Result};
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::policy::Policy;
use crate::replay::{BatchItem, Transition};
use crate::rng::Rng;

use super::config::{DensityPolicy, LearnerConfig};
use super::qtable::{Behavior, QTable};

pub fn greedy_action(q: &QTable, s: StateId, g_p: GoalId) -> ActionId {
    q.greedy_action(s, g_p, 1)
}

/// ε-greedy: a uniform action with probability `ε`, else greedy. With
/// `random_ties` the greedy choice is uniform among tied maxima instead of
/// the lowest index, so an untrained table still explores.
pub fn behavior_action(
    q: &QTable,
    s: StateId,
    g_p: GoalId,
    t: usize,
    epsilon: f64,
    random_ties: bool,
    rng: &mut Rng,
) -> ActionId {
    if epsilon > 0.0 && rng.bernoulli(epsilon) {
        return ActionId(rng.below(q.num_actions()));
    }
    if !random_ties {
        return q.greedy_action(s, g_p, t);
    }
    let values = q.actions(s, g_p, g_p, t);
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == best).count();
    let pick = if ties > 1 { rng.below(ties) } else { 0 };
    ActionId(
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == best)
            .nth(pick)
            .map(|(a, _)| a)
            .unwrap_or(0),
    )
}

/// Clamps `w` to `[1/(1+c), 1+c]`.
pub fn clip_ratio(w: f64, c: f64) -> f64 {
    w.clamp(1.0 / (1.0 + c), 1.0 + c)
}

fn done(mdp: &MultiGoalMdp, tr: &Transition, g: GoalId, t_conditioned: bool) -> bool {
    mdp.ends_return(tr.s_next, g) || (t_conditioned && tr.t_remaining == 1)
}

/// One TD step on `Q(s, a, g, g)` bootstrapping from the greedy value for
/// `g` at `s'`. Used by Q-learning (with the pursued goal) and HER (with
/// the relabeled goal).
pub fn q_update_vanilla(q: &mut QTable, mdp: &MultiGoalMdp, tr: &Transition, g: GoalId, lr: f64) {
    let t_cond = q.is_t_conditioned();
    let mut target = mdp.reward(tr.s_next, g);
    if !done(mdp, tr, g, t_cond) {
        target += mdp.discount() * q.value(tr.s_next, g, tr.t_remaining.saturating_sub(1).max(1));
    }
    let v = q.get_mut(tr.s, tr.a, g, g, tr.t_remaining);
    *v += lr * (target - *v);
}

pub fn her_update(q: &mut QTable, mdp: &MultiGoalMdp, item: &BatchItem, lr: f64) {
    q_update_vanilla(q, mdp, &item.transition, item.g_r.goal, lr);
}

/// The unclipped weight `W` for reward goal `g` at mixture fraction
/// `alpha`, from the current densities.
pub fn usher_weight(
    mdp: &MultiGoalMdp,
    f: &FTable,
    policy: &dyn Policy,
    tr: &Transition,
    g: GoalId,
    alpha: f64,
    keep_prob: Option<f64>,
) -> Result<f64> {
    let here = f.row(tr.s, tr.a, tr.g_p, tr.t_remaining)[g.0];
    let next = f.shifted_value(mdp, policy, tr, g);
    let (here, next) = match keep_prob {
        Some(kp) => {
            let kept = if g == tr.g_p { kp } else { 0.0 };
            (kept + (1.0 - kp) * here, kept + (1.0 - kp) * next)
        }
        None => (here, next),
    };
    compute_w(here, next, alpha)
}

/// The policy the successor density bootstraps with.
pub fn density_policy<'a>(q: &'a QTable, cfg: &LearnerConfig) -> Behavior<'a> {
    match cfg.density_policy {
        DensityPolicy::Greedy => Behavior {
            q,
            epsilon: 0.0,
            random_ties: false,
        },
        DensityPolicy::Behavior => Behavior {
            q,
            epsilon: cfg.epsilon,
            random_ties: cfg.random_ties,
        },
    }
}

/// The importance-weighted two-goal update for one replayed record,
/// followed by the configured density update.
pub fn usher_update(
    q: &mut QTable,
    f: &mut FTable,
    mdp: &MultiGoalMdp,
    item: &BatchItem,
    cfg: &LearnerConfig,
    lr: f64,
) -> Result<()> {
    let tr = &item.transition;
    if tr.t_remaining == 0 {
        return Err(Error::contract("transition with T = 0"));
    }
    let keep = cfg.keep_mass_in_weights.then(|| cfg.keep_prob());
    let gamma = mdp.discount();
    let t_next = tr.t_remaining.saturating_sub(1).max(1);
    let a_next = q.greedy_action(tr.s_next, tr.g_p, t_next);

    let mut steps = [(item.g_r.goal, 0.0, 0.0), (item.g_r_alt.goal, 0.0, 0.0)];
    {
        let policy = density_policy(q, cfg);
        for (step, share) in steps.iter_mut().zip([1.0 - cfg.alpha_q, cfg.alpha_q]) {
            let g = step.0;
            let w = usher_weight(mdp, f, &policy, tr, g, cfg.alpha_q, keep)?;
            step.1 = share * clip_ratio(w, cfg.clip);
            let mut target = mdp.reward(tr.s_next, g);
            if !done(mdp, tr, g, q.is_t_conditioned()) {
                target += gamma * q.get(tr.s_next, a_next, g, tr.g_p, t_next);
            }
            step.2 = target;
        }
    }
    for (g, weight, target) in steps {
        let v = q.get_mut(tr.s, tr.a, g, tr.g_p, tr.t_remaining);
        *v += (lr * weight).min(1.0) * (target - *v);
    }

    let policy = density_policy(q, cfg);
    let f_lr = cfg.density_lr(f.visits(tr.s, tr.a, tr.g_p, tr.t_remaining));
    match cfg.density_mode {
        DensityMode::Dense => f.update_dense(mdp, tr, &policy, f_lr),
        DensityMode::Sampled => f.update_sampled(
            mdp,
            tr,
            &policy,
            &SampledUpdate {
                g_r: item.g_r.goal,
                g_r_alt: item.g_r_alt.goal,
                lr: f_lr,
                alpha_f: cfg.alpha_f,
                keep_prob: cfg.keep_prob(),
            },
        ),
    }
}
