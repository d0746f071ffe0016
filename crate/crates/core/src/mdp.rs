//! The enumerable multi-goal MDP every environment, learner and oracle shares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const ROW_TOLERANCE: f64 = 1e-9;

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_newtype!(
    /// Dense state index in `[0, |S|)`.
    StateId
);
index_newtype!(
    /// Dense action index in `[0, |A|)`.
    ActionId
);
index_newtype!(
    /// Dense goal index in `[0, |G|)`.
    GoalId
);

/// One successor of a transition row.
pub type Outcome = (StateId, f64);

/// Everything needed to construct a [`MultiGoalMdp`].
#[derive(Clone, Debug)]
pub struct MdpSpec {
    pub name: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub num_goals: usize,
    pub start: Vec<Outcome>,
    /// Row `s * num_actions + a` lists the successors of `(s, a)`.
    pub transitions: Vec<Vec<Outcome>>,
    pub goal_map: Vec<GoalId>,
    pub terminal: Vec<bool>,
    /// Distribution the harness draws the per-episode policy goal from.
    pub policy_goals: Vec<(GoalId, f64)>,
    pub horizon: usize,
    pub discount: f64,
    pub state_labels: Vec<String>,
    pub action_labels: Vec<String>,
}

/// A validated, immutable multi-goal MDP with an exact transition table.
#[derive(Clone, Debug)]
pub struct MultiGoalMdp {
    spec: MdpSpec,
}

impl MultiGoalMdp {
    pub fn new(mut spec: MdpSpec) -> Result<Self> {
        let (ns, na, ng) = (spec.num_states, spec.num_actions, spec.num_goals);
        if ns == 0 || na == 0 || ng == 0 {
            return Err(Error::InvalidMdp("empty state, action or goal space".into()));
        }
        if spec.horizon == 0 {
            return Err(Error::InvalidMdp("horizon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&spec.discount) {
            return Err(Error::InvalidMdp(format!(
                "discount {} outside [0, 1]",
                spec.discount
            )));
        }
        if spec.transitions.len() != ns * na {
            return Err(Error::InvalidMdp(format!(
                "expected {} transition rows, got {}",
                ns * na,
                spec.transitions.len()
            )));
        }
        if spec.goal_map.len() != ns || spec.terminal.len() != ns {
            return Err(Error::InvalidMdp(
                "goal map and terminal flags must cover every state".into(),
            ));
        }
        if let Some(g) = spec.goal_map.iter().find(|g| g.0 >= ng) {
            return Err(Error::InvalidMdp(format!("goal map produces unknown goal {g}")));
        }
        check_distribution("start distribution", &spec.start, ns)?;
        check_distribution(
            "policy goal distribution",
            &spec
                .policy_goals
                .iter()
                .map(|&(g, p)| (StateId(g.0), p))
                .collect::<Vec<_>>(),
            ng,
        )?;
        for s in 0..ns {
            for a in 0..na {
                let row = &mut spec.transitions[s * na + a];
                check_distribution(&format!("transition row ({s}, {a})"), row, ns)?;
                row.retain(|&(_, p)| p > 0.0);
                if spec.terminal[s] && !(row.len() == 1 && row[0].0 .0 == s) {
                    return Err(Error::InvalidMdp(format!(
                        "terminal state {s} does not self-loop under action {a}"
                    )));
                }
            }
        }
        spec.start.retain(|&(_, p)| p > 0.0);
        spec.policy_goals.retain(|&(_, p)| p > 0.0);
        if spec.state_labels.len() != ns {
            spec.state_labels = (0..ns).map(|s| format!("s{s}")).collect();
        }
        if spec.action_labels.len() != na {
            spec.action_labels = (0..na).map(|a| format!("a{a}")).collect();
        }
        Ok(Self { spec })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.spec.num_actions
    }

    pub fn num_goals(&self) -> usize {
        self.spec.num_goals
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn discount(&self) -> f64 {
        self.spec.discount
    }

    pub fn start_distribution(&self) -> &[Outcome] {
        &self.spec.start
    }

    pub fn policy_goal_distribution(&self) -> &[(GoalId, f64)] {
        &self.spec.policy_goals
    }

    pub fn state_label(&self, s: StateId) -> &str {
        &self.spec.state_labels[s.0]
    }

    pub fn action_label(&self, a: ActionId) -> &str {
        &self.spec.action_labels[a.0]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.spec.num_states).map(StateId)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.spec.num_actions).map(ActionId)
    }

    pub fn goals(&self) -> impl Iterator<Item = GoalId> {
        (0..self.spec.num_goals).map(GoalId)
    }

    /// A copy with a different horizon and discount.
    pub fn with_horizon(&self, horizon: usize, discount: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.horizon = horizon;
        spec.discount = discount;
        Self::new(spec)
    }

    /// A copy whose per-episode policy goal is drawn from `goals`.
    pub fn with_policy_goals(&self, goals: Vec<(GoalId, f64)>) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.policy_goals = goals;
        Self::new(spec)
    }

    /// A copy with a different start distribution.
    pub fn with_start(&self, start: Vec<Outcome>) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.start = start;
        Self::new(spec)
    }

    fn check_state(&self, s: StateId) -> Result<()> {
        if s.0 < self.spec.num_states {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "state",
                index: s.0,
                limit: self.spec.num_states,
            })
        }
    }

    fn check_action(&self, a: ActionId) -> Result<()> {
        if a.0 < self.spec.num_actions {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "action",
                index: a.0,
                limit: self.spec.num_actions,
            })
        }
    }

    /// The exact successor distribution of `(s, a)`; zero-probability
    /// successors are omitted.
    pub fn transition_distribution(&self, s: StateId, a: ActionId) -> Result<&[Outcome]> {
        self.check_state(s)?;
        self.check_action(a)?;
        Ok(self.row(s, a))
    }

    /// The successor distribution as a dense vector over states.
    pub fn transition_dense(&self, s: StateId, a: ActionId) -> Result<Vec<f64>> {
        let mut dense = vec![0.0; self.spec.num_states];
        for &(next, p) in self.transition_distribution(s, a)? {
            dense[next.0] += p;
        }
        Ok(dense)
    }

    /// Unchecked row access for hot loops.
    #[inline]
    pub fn row(&self, s: StateId, a: ActionId) -> &[Outcome] {
        &self.spec.transitions[s.0 * self.spec.num_actions + a.0]
    }

    pub fn sample_step(&self, s: StateId, a: ActionId, rng: &mut Rng) -> Result<StateId> {
        Ok(rng.categorical(self.transition_distribution(s, a)?))
    }

    #[inline]
    pub(crate) fn step(&self, s: StateId, a: ActionId, rng: &mut Rng) -> StateId {
        rng.categorical(self.row(s, a))
    }

    pub fn sample_start(&self, rng: &mut Rng) -> StateId {
        rng.categorical(&self.spec.start)
    }

    pub fn sample_policy_goal(&self, rng: &mut Rng) -> GoalId {
        rng.categorical(&self.spec.policy_goals)
    }

    /// φ(s).
    #[inline]
    pub fn goal_of(&self, s: StateId) -> GoalId {
        self.spec.goal_map[s.0]
    }

    #[inline]
    pub fn is_terminal(&self, s: StateId) -> bool {
        self.spec.terminal[s.0]
    }

    /// Sparse reward `1{φ(s_next) = g}`.
    #[inline]
    pub fn reward(&self, s_next: StateId, g: GoalId) -> f64 {
        if self.goal_of(s_next) == g {
            1.0
        } else {
            0.0
        }
    }

    /// Whether a step into `s_next` ends the return for reward goal `g`:
    /// the goal was reached or the state absorbs.
    #[inline]
    pub fn ends_return(&self, s_next: StateId, g: GoalId) -> bool {
        self.goal_of(s_next) == g || self.is_terminal(s_next)
    }
}

fn check_distribution(what: &str, dist: &[Outcome], limit: usize) -> Result<()> {
    let mut total = 0.0;
    for &(i, p) in dist {
        if i.0 >= limit {
            return Err(Error::InvalidMdp(format!("{what}: index {} out of range", i.0)));
        }
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidMdp(format!("{what}: bad probability {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::InvalidMdp(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0 -> 1 -> 2 on action 0, with state 2 absorbing.
    fn chain() -> MultiGoalMdp {
        let transitions = vec![
            vec![(StateId(1), 1.0)],
            vec![(StateId(2), 1.0)],
            vec![(StateId(2), 1.0)],
        ];
        MultiGoalMdp::new(MdpSpec {
            name: "chain".into(),
            num_states: 3,
            num_actions: 1,
            num_goals: 3,
            start: vec![(StateId(0), 1.0)],
            transitions,
            goal_map: vec![GoalId(0), GoalId(1), GoalId(2)],
            terminal: vec![false, false, true],
            policy_goals: vec![(GoalId(2), 1.0)],
            horizon: 3,
            discount: 0.9,
            state_labels: vec![],
            action_labels: vec![],
        })
        .unwrap()
    }

    #[test]
    fn deterministic_row_is_exact() {
        let mdp = chain();
        assert_eq!(
            mdp.transition_distribution(StateId(0), ActionId(0)).unwrap(),
            &[(StateId(1), 1.0)]
        );
        let mut rng = Rng::new(0);
        for _ in 0..50 {
            assert_eq!(mdp.sample_step(StateId(0), ActionId(0), &mut rng).unwrap(), StateId(1));
        }
    }

    #[test]
    fn terminal_self_loops() {
        let mdp = chain();
        assert_eq!(mdp.transition_dense(StateId(2), ActionId(0)).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let mdp = chain();
        assert!(matches!(
            mdp.transition_distribution(StateId(3), ActionId(0)),
            Err(Error::IndexOutOfRange { what: "state", .. })
        ));
        assert!(matches!(
            mdp.transition_distribution(StateId(0), ActionId(1)),
            Err(Error::IndexOutOfRange { what: "action", .. })
        ));
    }

    #[test]
    fn reward_follows_goal_map() {
        let mdp = chain();
        assert_eq!(mdp.reward(StateId(1), GoalId(1)), 1.0);
        assert_eq!(mdp.reward(StateId(1), GoalId(2)), 0.0);
    }

    #[test]
    fn rejects_unnormalized_rows() {
        let mut spec = chain().spec.clone();
        spec.transitions[0] = vec![(StateId(1), 0.6), (StateId(2), 0.3)];
        assert!(matches!(MultiGoalMdp::new(spec), Err(Error::InvalidMdp(_))));
    }

    #[test]
    fn rejects_leaky_terminal() {
        let mut spec = chain().spec.clone();
        spec.transitions[2] = vec![(StateId(0), 1.0)];
        assert!(MultiGoalMdp::new(spec).is_err());
    }

    #[test]
    fn seeded_sampling_repeats() {
        let mdp = chain();
        let run = |seed| {
            let mut rng = Rng::new(seed);
            (0..20).map(|_| mdp.sample_start(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }
}
