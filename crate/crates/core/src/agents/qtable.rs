//! Dense action-value tables.

use crate::error::{Error, Result};
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::policy::{argmax, Policy};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum QLayout {
    /// `Q(s, a, g)`: one goal plays both roles. The reward goal indexes the
    /// table and the policy goal is ignored.
    Diagonal,
    /// The full two-goal table `Q(s, a, g_r, g_p)`.
    TwoGoal,
}

/// Action values, zero until updated. With `t_conditioned` every entry is
/// further indexed by the steps remaining.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    num_goals: usize,
    layout: QLayout,
    /// 1 when not conditioned on `T`.
    t_slots: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(
        mdp: &MultiGoalMdp,
        layout: QLayout,
        t_conditioned: bool,
    ) -> Result<Self> {
        let (ns, na, ng) = (mdp.num_states(), mdp.num_actions(), mdp.num_goals());
        let t_slots = if t_conditioned { mdp.horizon() } else { 1 };
        let goal_pairs = match layout {
            QLayout::Diagonal => ng,
            QLayout::TwoGoal => ng * ng,
        };
        let len = goal_pairs
            .checked_mul(ns * na)
            .and_then(|n| n.checked_mul(t_slots))
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| Error::Config("action-value table too large".into()))?;
        Ok(Self {
            num_states: ns,
            num_actions: na,
            num_goals: ng,
            layout,
            t_slots,
            values: vec![0.0; len],
        })
    }

    pub fn layout(&self) -> QLayout {
        self.layout
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn is_t_conditioned(&self) -> bool {
        self.t_slots > 1
    }

    #[inline]
    fn base(&self, s: StateId, g_r: GoalId, g_p: GoalId, t: usize) -> usize {
        let goal = match self.layout {
            QLayout::Diagonal => g_r.0,
            QLayout::TwoGoal => g_p.0 * self.num_goals + g_r.0,
        };
        let t_slot = if self.t_slots > 1 { t - 1 } else { 0 };
        ((goal * self.num_states + s.0) * self.t_slots + t_slot) * self.num_actions
    }

    /// The action values of `(s, ·, g_r, g_p)` with `t` steps remaining
    /// (`t` is ignored unless the table is `T`-conditioned).
    #[inline]
    pub fn actions(&self, s: StateId, g_r: GoalId, g_p: GoalId, t: usize) -> &[f64] {
        let b = self.base(s, g_r, g_p, t);
        &self.values[b..b + self.num_actions]
    }

    #[inline]
    pub fn get(&self, s: StateId, a: ActionId, g_r: GoalId, g_p: GoalId, t: usize) -> f64 {
        self.values[self.base(s, g_r, g_p, t) + a.0]
    }

    #[inline]
    pub fn get_mut(&mut self, s: StateId, a: ActionId, g_r: GoalId, g_p: GoalId, t: usize) -> &mut f64 {
        let i = self.base(s, g_r, g_p, t) + a.0;
        &mut self.values[i]
    }

    /// `argmax_a Q(s, a, g_p, g_p)`, ties to the lowest action.
    #[inline]
    pub fn greedy_action(&self, s: StateId, g_p: GoalId, t: usize) -> ActionId {
        ActionId(argmax(self.actions(s, g_p, g_p, t).iter().copied()))
    }

    /// `max_a Q(s, a, g_p, g_p)`.
    pub fn value(&self, s: StateId, g_p: GoalId, t: usize) -> f64 {
        self.actions(s, g_p, g_p, t)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&mut self, by: f64) {
        for v in &mut self.values {
            *v *= by;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn greedy(&self) -> Greedy<'_> {
        Greedy(self)
    }
}

/// The greedy policy of a table.
#[derive(Copy, Clone)]
pub struct Greedy<'a>(pub &'a QTable);

impl Policy for Greedy<'_> {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.0.greedy_action(s, g_p, steps_left).0] = 1.0;
    }
}

/// The ε-greedy behavior policy, optionally spreading the greedy mass over
/// tied maxima.
#[derive(Copy, Clone)]
pub struct Behavior<'a> {
    pub q: &'a QTable,
    pub epsilon: f64,
    pub random_ties: bool,
}

impl Policy for Behavior<'_> {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        let values = self.q.actions(s, g_p, g_p, steps_left);
        let explore = self.epsilon / values.len() as f64;
        out.fill(explore);
        if self.random_ties {
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties = values.iter().filter(|&&v| v == best).count() as f64;
            for (o, &v) in out.iter_mut().zip(values) {
                if v == best {
                    *o += (1.0 - self.epsilon) / ties;
                }
            }
        } else {
            out[self.q.greedy_action(s, g_p, steps_left).0] += 1.0 - self.epsilon;
        }
    }
}
