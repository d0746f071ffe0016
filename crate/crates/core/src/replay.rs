//! Trajectory storage and hindsight goal relabeling.
//!
//! A trajectory is recorded for a nominal `horizon` steps. When the episode
//! enters an absorbing state early, the stored prefix stops there and every
//! later state is taken to be that absorbing state, so `t_remaining` is
//! always `horizon - step_index` and relabeling sees the full padded future.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::rng::Rng;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub s: StateId,
    pub a: ActionId,
    pub s_next: StateId,
    pub g_p: GoalId,
    /// Steps remaining in the episode at `s`, including this one.
    pub t_remaining: usize,
    pub episode_id: u64,
    pub step_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    g_p: GoalId,
    horizon: usize,
    episode_id: u64,
    transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new(g_p: GoalId, horizon: usize, episode_id: u64) -> Self {
        Self {
            g_p,
            horizon,
            episode_id,
            transitions: Vec::with_capacity(horizon),
        }
    }

    /// Appends the next step. Panics past the horizon or on a state that
    /// does not continue from the previous step.
    pub fn push(&mut self, s: StateId, a: ActionId, s_next: StateId) {
        let step_index = self.transitions.len();
        assert!(step_index < self.horizon, "trajectory longer than its horizon");
        if let Some(prev) = self.transitions.last() {
            assert_eq!(prev.s_next, s, "trajectory is not contiguous");
        }
        self.transitions.push(Transition {
            s,
            a,
            s_next,
            g_p: self.g_p,
            t_remaining: self.horizon - step_index,
            episode_id: self.episode_id,
            step_index,
        });
    }

    pub fn policy_goal(&self) -> GoalId {
        self.g_p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn episode_id(&self) -> u64 {
        self.episode_id
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// The state reached by step `j` of the padded trajectory, i.e.
    /// `s_{j+1}`.
    pub fn state_after(&self, j: usize) -> StateId {
        let last = self.transitions.len() - 1;
        self.transitions[j.min(last)].s_next
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalSource {
    KeptPolicyGoal,
    HindsightFuture,
    UniformSpace,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct GoalSample {
    pub goal: GoalId,
    pub source: GoalSource,
}

/// HER's "future" relabeling: keep `g_p` with probability `1/(k+1)`,
/// otherwise take `φ` of a state drawn uniformly from the `T` states that
/// follow `s` (which includes `s_next`).
pub fn relabel_her(
    mdp: &MultiGoalMdp,
    traj: &Trajectory,
    step_index: usize,
    k: usize,
    rng: &mut Rng,
) -> GoalSample {
    let t = &traj.transitions[step_index];
    if rng.below(k + 1) == 0 {
        return GoalSample {
            goal: t.g_p,
            source: GoalSource::KeptPolicyGoal,
        };
    }
    let j = step_index + rng.below(t.t_remaining);
    GoalSample {
        goal: mdp.goal_of(traj.state_after(j)),
        source: GoalSource::HindsightFuture,
    }
}

pub fn sample_uniform_goal(num_goals: usize, rng: &mut Rng) -> GoalSample {
    GoalSample {
        goal: GoalId(rng.below(num_goals)),
        source: GoalSource::UniformSpace,
    }
}

/// One replayed record: the transition, its HER goal and an independent
/// uniform goal.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BatchItem {
    pub transition: Transition,
    pub g_r: GoalSample,
    pub g_r_alt: GoalSample,
}

/// FIFO store of whole trajectories with uniform sampling over their
/// transitions.
#[derive(Clone, Debug, Default)]
pub struct ReplayBuffer {
    capacity: Option<usize>,
    trajectories: VecDeque<Trajectory>,
    /// Global transition offset of each stored trajectory.
    offsets: VecDeque<usize>,
    end: usize,
}

impl ReplayBuffer {
    /// `capacity` in episodes; `None` keeps everything.
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            ..Default::default()
        }
    }

    pub fn record_trajectory(&mut self, traj: Trajectory) -> Result<()> {
        if traj.is_empty() {
            return Err(Error::contract("cannot record an empty trajectory"));
        }
        self.offsets.push_back(self.end);
        self.end += traj.len();
        self.trajectories.push_back(traj);
        if let Some(cap) = self.capacity {
            while self.trajectories.len() > cap {
                self.trajectories.pop_front();
                self.offsets.pop_front();
            }
        }
        Ok(())
    }

    pub fn num_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.offsets.front().map_or(0, |&o| self.end - o)
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter()
    }

    /// A stored transition drawn uniformly, with its trajectory.
    pub fn sample_transition(&self, rng: &mut Rng) -> Result<(&Trajectory, usize)> {
        let n = self.num_transitions();
        if n == 0 {
            return Err(Error::EmptyBuffer);
        }
        let global = self.offsets[0] + rng.below(n);
        let i = self.offsets.partition_point(|&o| o <= global) - 1;
        Ok((&self.trajectories[i], global - self.offsets[i]))
    }

    pub fn sample_batch(
        &self,
        mdp: &MultiGoalMdp,
        batch_size: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Vec<BatchItem>> {
        let mut batch = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            batch.push(self.sample_item(mdp, k, rng)?);
        }
        Ok(batch)
    }

    pub fn sample_item(&self, mdp: &MultiGoalMdp, k: usize, rng: &mut Rng) -> Result<BatchItem> {
        let (traj, step) = self.sample_transition(rng)?;
        let g_r = relabel_her(mdp, traj, step, k, rng);
        let g_r_alt = sample_uniform_goal(mdp.num_goals(), rng);
        Ok(BatchItem {
            transition: traj.transitions[step],
            g_r,
            g_r_alt,
        })
    }
}
