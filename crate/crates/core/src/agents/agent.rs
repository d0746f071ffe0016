//! A learner together with its replay buffer and episode loop.

use crate::density::FTable;
use crate::error::Result;
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::replay::{ReplayBuffer, Trajectory};
use crate::rng::Rng;

use super::config::{AgentKind, LearnerConfig};
use super::qtable::{QLayout, QTable};
use super::update::{behavior_action, her_update, q_update_vanilla, usher_update};

/// What happened in one collected episode.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub g_p: GoalId,
    pub success: bool,
    /// `γ^j` for a first arrival at the pursued goal on step `j`, else 0.
    pub discounted_return: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct Agent {
    kind: AgentKind,
    cfg: LearnerConfig,
    q: QTable,
    f: Option<FTable>,
    buffer: ReplayBuffer,
    episodes: u64,
}

impl Agent {
    pub fn new(kind: AgentKind, cfg: LearnerConfig, mdp: &MultiGoalMdp) -> Result<Self> {
        cfg.validate()?;
        let layout = match kind {
            AgentKind::Usher => QLayout::TwoGoal,
            AgentKind::QLearning | AgentKind::Her => QLayout::Diagonal,
        };
        let q = QTable::new(mdp, layout, cfg.t_conditioned)?;
        let f = (kind == AgentKind::Usher)
            .then(|| FTable::for_mdp(mdp).with_target_interval(cfg.target_interval));
        Ok(Self {
            kind,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            cfg,
            q,
            f,
            episodes: 0,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn density(&self) -> Option<&FTable> {
        self.f.as_ref()
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn greedy_action(&self, s: StateId, g_p: GoalId, steps_left: usize) -> ActionId {
        self.q.greedy_action(s, g_p, steps_left)
    }

    /// Predicted value `max_a Q(s, a, g_p, g_p)` with a full horizon ahead.
    pub fn predicted_value(&self, mdp: &MultiGoalMdp, s: StateId, g_p: GoalId) -> f64 {
        self.q.value(s, g_p, mdp.horizon())
    }

    /// Collects one ε-greedy episode, stores it and trains on the buffer.
    pub fn run_episode(&mut self, mdp: &MultiGoalMdp, rng: &mut Rng) -> Result<EpisodeSummary> {
        let horizon = mdp.horizon();
        let g_p = mdp.sample_policy_goal(rng);
        let mut s = mdp.sample_start(rng);
        let mut traj = Trajectory::new(g_p, horizon, self.episodes);
        let online = self.kind == AgentKind::QLearning && self.cfg.online;
        let lr = self.cfg.lr(self.episodes);
        let mut summary = EpisodeSummary {
            g_p,
            success: false,
            discounted_return: 0.0,
            steps: 0,
        };
        for step in 0..horizon {
            let t = horizon - step;
            let a = behavior_action(&self.q, s, g_p, t, self.cfg.epsilon, self.cfg.random_ties, rng);
            let s_next = mdp.step(s, a, rng);
            traj.push(s, a, s_next);
            if online {
                let tr = traj.transitions()[step];
                q_update_vanilla(&mut self.q, mdp, &tr, g_p, lr);
            }
            if !summary.success && mdp.goal_of(s_next) == g_p {
                summary.success = true;
                summary.discounted_return = mdp.discount().powi(step as i32);
            }
            summary.steps = step + 1;
            if mdp.is_terminal(s_next) {
                break;
            }
            s = s_next;
        }
        self.buffer.record_trajectory(traj)?;
        if !online {
            self.train(mdp, rng)?;
        }
        self.episodes += 1;
        Ok(summary)
    }

    /// Runs the configured number of replay updates.
    pub fn train(&mut self, mdp: &MultiGoalMdp, rng: &mut Rng) -> Result<()> {
        let lr = self.cfg.lr(self.episodes);
        let n = self.cfg.batch_size * self.cfg.batches_per_episode;
        for _ in 0..n {
            match self.kind {
                AgentKind::QLearning => {
                    let (traj, step) = self.buffer.sample_transition(rng)?;
                    let tr = traj.transitions()[step];
                    q_update_vanilla(&mut self.q, mdp, &tr, tr.g_p, lr);
                }
                AgentKind::Her => {
                    let item = self.buffer.sample_item(mdp, self.cfg.k, rng)?;
                    her_update(&mut self.q, mdp, &item, lr);
                }
                AgentKind::Usher => {
                    let item = self.buffer.sample_item(mdp, self.cfg.k, rng)?;
                    let f = self.f.as_mut().expect("usher agent owns a density table");
                    usher_update(&mut self.q, f, mdp, &item, &self.cfg, lr)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_risky_gridworld, parse_grid_map};

    #[test]
    fn training_is_seed_deterministic() {
        let mdp = build_risky_gridworld(&parse_grid_map("S.!.G").unwrap(), 8, 0.9).unwrap();
        let run = || {
            let mut agent = Agent::new(AgentKind::Usher, LearnerConfig::default(), &mdp).unwrap();
            let mut rng = Rng::new(17);
            let out: Vec<EpisodeSummary> =
                (0..20).map(|_| agent.run_episode(&mdp, &mut rng).unwrap()).collect();
            (out, agent.q().clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn values_stay_finite() {
        let mdp = build_risky_gridworld(&parse_grid_map("S!G").unwrap(), 6, 0.9).unwrap();
        for kind in [AgentKind::QLearning, AgentKind::Her, AgentKind::Usher] {
            let cfg = LearnerConfig {
                lr0: 0.5,
                ..Default::default()
            };
            let mut agent = Agent::new(kind, cfg, &mdp).unwrap();
            let mut rng = Rng::new(2);
            for _ in 0..30 {
                agent.run_episode(&mdp, &mut rng).unwrap();
            }
            assert!(agent.q().is_finite());
        }
    }
}
