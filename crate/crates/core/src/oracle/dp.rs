//! Finite-horizon dynamic programming: optimal action values and exact
//! successor goal densities.

use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::policy::{argmax, Policy};

/// Optimal action values for one goal with success absorbing.
///
/// Layer `t` holds `Q*_t(s, a, g)` with `t` steps remaining, built from
/// `V*_0 = 0` by `Q*_t(s, a) = Σ P(s'|s,a) [R(s', g) + γ (1 - done) V*_{t-1}(s')]`
/// where `done` marks reaching `g` or an absorbing state.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactQ {
    goal: GoalId,
    num_states: usize,
    num_actions: usize,
    discount: f64,
    /// `layers[t - 1][s * |A| + a]`.
    layers: Vec<Vec<f64>>,
}

pub fn value_iteration(mdp: &MultiGoalMdp, g: GoalId) -> ExactQ {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let gamma = mdp.discount();
    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(mdp.horizon());
    let mut v_prev = vec![0.0; ns];
    for _ in 0..mdp.horizon() {
        let mut layer = vec![0.0; ns * na];
        for s in mdp.states() {
            for a in mdp.actions() {
                layer[s.0 * na + a.0] = mdp
                    .row(s, a)
                    .iter()
                    .map(|&(n, p)| {
                        let cont = if mdp.ends_return(n, g) { 0.0 } else { gamma * v_prev[n.0] };
                        p * (mdp.reward(n, g) + cont)
                    })
                    .sum();
            }
        }
        v_prev = layer
            .chunks(na)
            .map(|q| q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        layers.push(layer);
    }
    ExactQ {
        goal: g,
        num_states: ns,
        num_actions: na,
        discount: gamma,
        layers,
    }
}

impl ExactQ {
    pub fn goal(&self) -> GoalId {
        self.goal
    }

    pub fn horizon(&self) -> usize {
        self.layers.len()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Action values at `s` with `t` steps remaining.
    pub fn actions(&self, s: StateId, t: usize) -> &[f64] {
        let b = s.0 * self.num_actions;
        &self.layers[t - 1][b..b + self.num_actions]
    }

    pub fn q(&self, s: StateId, a: ActionId, t: usize) -> f64 {
        self.actions(s, t)[a.0]
    }

    pub fn value(&self, s: StateId, t: usize) -> f64 {
        self.actions(s, t).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: StateId, t: usize) -> ActionId {
        ActionId(argmax(self.actions(s, t).iter().copied()))
    }

    /// Largest violation of the finite-horizon Bellman equation.
    pub fn bellman_residual(&self, mdp: &MultiGoalMdp) -> f64 {
        let g = self.goal;
        let mut worst = 0.0f64;
        for t in 1..=self.horizon() {
            for s in mdp.states() {
                for a in mdp.actions() {
                    let backup: f64 = mdp
                        .row(s, a)
                        .iter()
                        .map(|&(n, p)| {
                            let v = if t == 1 || mdp.ends_return(n, g) {
                                0.0
                            } else {
                                self.discount * self.value(n, t - 1)
                            };
                            p * (mdp.reward(n, g) + v)
                        })
                        .sum();
                    worst = worst.max((backup - self.q(s, a, t)).abs());
                }
            }
        }
        worst
    }

    /// `max |Q*_t - Q*_{t-1}|` for `t = 2..=horizon`.
    pub fn sweep_deltas(&self) -> Vec<f64> {
        self.layers
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// The optimal time-dependent policy for every goal it was solved for.
#[derive(Clone, Debug)]
pub struct OptimalPolicy {
    per_goal: Vec<Option<ExactQ>>,
}

impl OptimalPolicy {
    /// Solves every goal in the MDP's policy-goal distribution.
    pub fn solve(mdp: &MultiGoalMdp) -> Self {
        let goals: Vec<GoalId> = mdp.policy_goal_distribution().iter().map(|&(g, _)| g).collect();
        Self::solve_goals(mdp, &goals)
    }

    pub fn solve_goals(mdp: &MultiGoalMdp, goals: &[GoalId]) -> Self {
        let mut per_goal = vec![None; mdp.num_goals()];
        for &g in goals {
            per_goal[g.0] = Some(value_iteration(mdp, g));
        }
        Self { per_goal }
    }

    /// Panics if `g` was not solved.
    pub fn exact(&self, g: GoalId) -> &ExactQ {
        self.per_goal[g.0].as_ref().expect("goal was not solved")
    }
}

impl Policy for OptimalPolicy {
    fn action_probs(&self, s: StateId, g_p: GoalId, steps_left: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.exact(g_p).greedy(s, steps_left.max(1)).0] = 1.0;
    }
}

/// Exact successor goal densities of a fixed policy for one policy goal.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactF {
    g_p: GoalId,
    num_actions: usize,
    num_goals: usize,
    /// `layers[T - 1][(s * |A| + a) * |G| + g]`.
    layers: Vec<Vec<f64>>,
}

pub fn exact_successor_density(
    mdp: &MultiGoalMdp,
    policy: &dyn Policy,
    g_p: GoalId,
    t_max: usize,
) -> ExactF {
    let (ns, na, ng) = (mdp.num_states(), mdp.num_actions(), mdp.num_goals());
    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(t_max);
    let mut probs = vec![0.0; na];
    // Policy-averaged row at each state for the previous T.
    let mut avg_prev = vec![0.0; ns * ng];
    for t in 1..=t_max {
        let inv_t = 1.0 / t as f64;
        let mut layer = vec![0.0; ns * na * ng];
        for s in mdp.states() {
            for a in mdp.actions() {
                let row = &mut layer[(s.0 * na + a.0) * ng..(s.0 * na + a.0 + 1) * ng];
                for &(n, p) in mdp.row(s, a) {
                    row[mdp.goal_of(n).0] += p * inv_t;
                    if t > 1 {
                        let w = p * (1.0 - inv_t);
                        for (r, &v) in row.iter_mut().zip(&avg_prev[n.0 * ng..(n.0 + 1) * ng]) {
                            *r += w * v;
                        }
                    }
                }
            }
        }
        let mut avg = vec![0.0; ns * ng];
        for s in mdp.states() {
            policy.action_probs(s, g_p, t, &mut probs);
            let out = &mut avg[s.0 * ng..(s.0 + 1) * ng];
            for (a, &pa) in probs.iter().enumerate() {
                if pa > 0.0 {
                    let row = &layer[(s.0 * na + a) * ng..(s.0 * na + a + 1) * ng];
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o += pa * v;
                    }
                }
            }
        }
        avg_prev = avg;
        layers.push(layer);
    }
    ExactF {
        g_p,
        num_actions: na,
        num_goals: ng,
        layers,
    }
}

impl ExactF {
    pub fn policy_goal(&self) -> GoalId {
        self.g_p
    }

    pub fn t_max(&self) -> usize {
        self.layers.len()
    }

    /// `f*(· | s, a, g_p, T)`.
    pub fn row(&self, s: StateId, a: ActionId, t: usize) -> &[f64] {
        let b = (s.0 * self.num_actions + a.0) * self.num_goals;
        &self.layers[t - 1][b..b + self.num_goals]
    }

    /// The successor term `(1/T) onehot(φ(s')) + (1 - 1/T) Σ_a' π(a'|s') f*(· | s', a', T-1)`
    /// for a realized `s'`.
    pub fn shifted(&self, mdp: &MultiGoalMdp, policy: &dyn Policy, s_next: StateId, t: usize) -> Vec<f64> {
        let inv_t = 1.0 / t as f64;
        let mut out = vec![0.0; self.num_goals];
        if t > 1 {
            let mut probs = vec![0.0; self.num_actions];
            policy.action_probs(s_next, self.g_p, t - 1, &mut probs);
            for (a, &pa) in probs.iter().enumerate() {
                if pa > 0.0 {
                    for (o, &v) in out.iter_mut().zip(self.row(s_next, ActionId(a), t - 1)) {
                        *o += (1.0 - inv_t) * pa * v;
                    }
                }
            }
        }
        out[mdp.goal_of(s_next).0] += inv_t;
        out
    }

    /// Largest L1 violation of the recursion over every stored row.
    pub fn recursion_residual(&self, mdp: &MultiGoalMdp, policy: &dyn Policy) -> f64 {
        let mut worst = 0.0f64;
        for t in 1..=self.t_max() {
            for s in mdp.states() {
                for a in mdp.actions() {
                    let mut expect = vec![0.0; self.num_goals];
                    for &(n, p) in mdp.row(s, a) {
                        for (e, v) in expect.iter_mut().zip(self.shifted(mdp, policy, n, t)) {
                            *e += p * v;
                        }
                    }
                    let l1: f64 = expect
                        .iter()
                        .zip(self.row(s, a, t))
                        .map(|(x, y)| (x - y).abs())
                        .sum();
                    worst = worst.max(l1);
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_risky_gridworld, parse_grid_map};
    use crate::policy::ConstantPolicy;

    const RIGHT: ActionId = ActionId(3);

    fn grid(text: &str, horizon: usize) -> MultiGoalMdp {
        build_risky_gridworld(&parse_grid_map(text).unwrap(), horizon, 0.825).unwrap()
    }

    #[test]
    fn chain_values() {
        let two = grid("SG", 5);
        assert_eq!(value_iteration(&two, GoalId(1)).q(StateId(0), RIGHT, 5), 1.0);
        let three = grid("S.G", 5);
        let q = value_iteration(&three, GoalId(2));
        assert!((q.value(StateId(0), 5) - 0.825).abs() < 1e-15);
        assert_eq!(q.greedy(StateId(0), 5), RIGHT);
        assert!(q.bellman_residual(&three) < 1e-12);
    }

    #[test]
    fn hazard_start_value() {
        let mdp = grid("S!G", 5);
        let q = value_iteration(&mdp, GoalId(2));
        // Survive the hazard with 0.25, then one more step to the goal.
        assert!((q.value(StateId(0), 5) - 0.25 * 0.825).abs() < 1e-12);
    }

    #[test]
    fn sweep_deltas_shrink() {
        let mdp = grid(crate::env::DEFAULT_RISKY_MAP, 30);
        let g = mdp.policy_goal_distribution()[0].0;
        let deltas = value_iteration(&mdp, g).sweep_deltas();
        assert!(deltas.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn successor_density_base_and_uniform_cases() {
        let mdp = grid("S...G", 3);
        let pi = ConstantPolicy(RIGHT);
        let f = exact_successor_density(&mdp, &pi, GoalId(4), 3);
        assert_eq!(f.row(StateId(0), RIGHT, 1), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let third = 1.0 / 3.0;
        let row = f.row(StateId(0), RIGHT, 3);
        for (g, want) in [(1, third), (2, third), (3, third)] {
            assert!((row[g] - want).abs() < 1e-15);
        }
        assert!(f.recursion_residual(&mdp, &pi) < 1e-12);
    }

    #[test]
    fn hazard_row_splits() {
        let mdp = grid("S!G", 3);
        let pi = ConstantPolicy(RIGHT);
        let f = exact_successor_density(&mdp, &pi, GoalId(2), 2);
        // From the hazard cell: stay in the fail state with 0.75, else reach G.
        let row = f.row(StateId(0), RIGHT, 2);
        assert!((row[1] - 0.5 * 0.25).abs() < 1e-15);
        assert!((row[3] - (0.5 * 0.75 + 0.5 * 0.75)).abs() < 1e-15);
        assert!((row[2] - 0.5 * 0.25).abs() < 1e-15);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
