//! A discrete torus with a freeze action.
//!
//! Moves step one cell along a dimension and wrap. Freeze teleports the
//! robot to a uniformly random cell and pins it there for the rest of the
//! episode. The goal is the cell; the frozen flag is not part of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{GoalId, MdpSpec, MultiGoalMdp, StateId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusFreezeConfig {
    pub dims: usize,
    pub cells_per_dim: usize,
    /// Flat index of the start cell.
    pub start_cell: usize,
    /// Policy goals are the cells at least this far (L1 torus distance)
    /// from the start cell.
    pub min_goal_distance: usize,
}

impl Default for TorusFreezeConfig {
    fn default() -> Self {
        Self {
            dims: 2,
            cells_per_dim: 8,
            start_cell: 0,
            min_goal_distance: 0,
        }
    }
}

impl TorusFreezeConfig {
    pub fn num_cells(&self) -> usize {
        self.cells_per_dim.pow(self.dims as u32)
    }

    pub fn coords(&self, cell: usize) -> Vec<usize> {
        let mut rest = cell;
        (0..self.dims)
            .map(|_| {
                let c = rest % self.cells_per_dim;
                rest /= self.cells_per_dim;
                c
            })
            .collect()
    }

    pub fn cell(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.cells_per_dim + c)
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let n = self.cells_per_dim;
        self.coords(a)
            .iter()
            .zip(self.coords(b))
            .map(|(&x, y)| {
                let d = x.abs_diff(y);
                d.min(n - d)
            })
            .sum()
    }

    pub fn state(&self, cell: usize, frozen: bool) -> StateId {
        StateId(cell + if frozen { self.num_cells() } else { 0 })
    }

    pub fn freeze_action(&self) -> usize {
        2 * self.dims
    }

    pub fn policy_goal_cells(&self) -> Vec<usize> {
        (0..self.num_cells())
            .filter(|&c| self.distance(self.start_cell, c) >= self.min_goal_distance)
            .collect()
    }
}

pub fn build_torus_freeze(
    cfg: &TorusFreezeConfig,
    horizon: usize,
    discount: f64,
) -> Result<MultiGoalMdp> {
    if cfg.dims == 0 || cfg.cells_per_dim < 2 {
        return Err(Error::InvalidMdp("torus needs dims >= 1 and >= 2 cells per dim".into()));
    }
    let n = cfg.num_cells();
    if cfg.start_cell >= n {
        return Err(Error::InvalidMdp(format!("start cell {} out of range", cfg.start_cell)));
    }
    let goals = cfg.policy_goal_cells();
    if goals.is_empty() {
        return Err(Error::InvalidMdp("no cell satisfies min_goal_distance".into()));
    }
    let num_actions = 2 * cfg.dims + 1;
    let num_states = 2 * n;
    let teleport: Vec<(StateId, f64)> = (0..n)
        .map(|c| (cfg.state(c, true), 1.0 / n as f64))
        .collect();

    let mut transitions = Vec::with_capacity(num_states * num_actions);
    let mut labels = Vec::with_capacity(num_states);
    for frozen in [false, true] {
        for cell in 0..n {
            let coords = cfg.coords(cell);
            labels.push(format!("{coords:?}{}", if frozen { "*" } else { "" }));
            for a in 0..num_actions {
                if frozen {
                    transitions.push(vec![(cfg.state(cell, true), 1.0)]);
                } else if a == cfg.freeze_action() {
                    transitions.push(teleport.clone());
                } else {
                    let (dim, up) = (a / 2, a % 2 == 0);
                    let mut next = coords.clone();
                    let k = cfg.cells_per_dim;
                    next[dim] = if up { (next[dim] + 1) % k } else { (next[dim] + k - 1) % k };
                    transitions.push(vec![(cfg.state(cfg.cell(&next), false), 1.0)]);
                }
            }
        }
    }

    let mut action_labels = Vec::with_capacity(num_actions);
    for d in 0..cfg.dims {
        action_labels.push(format!("+{d}"));
        action_labels.push(format!("-{d}"));
    }
    action_labels.push("freeze".into());
    let pg = 1.0 / goals.len() as f64;

    MultiGoalMdp::new(MdpSpec {
        name: "torus-freeze".into(),
        num_states,
        num_actions,
        num_goals: n,
        start: vec![(cfg.state(cfg.start_cell, false), 1.0)],
        transitions,
        goal_map: (0..num_states).map(|s| GoalId(s % n)).collect(),
        terminal: (0..num_states).map(|s| s >= n).collect(),
        policy_goals: goals.into_iter().map(|c| (GoalId(c), pg)).collect(),
        horizon,
        discount,
        state_labels: labels,
        action_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionId;

    #[test]
    fn one_dim_wraps() {
        let cfg = TorusFreezeConfig {
            dims: 1,
            cells_per_dim: 4,
            ..Default::default()
        };
        let mdp = build_torus_freeze(&cfg, 10, 0.9).unwrap();
        let row = mdp.transition_distribution(cfg.state(3, false), ActionId(0)).unwrap();
        assert_eq!(row, &[(cfg.state(0, false), 1.0)]);
    }

    #[test]
    fn freeze_is_uniform_and_sets_flag() {
        let cfg = TorusFreezeConfig {
            cells_per_dim: 4,
            ..Default::default()
        };
        let mdp = build_torus_freeze(&cfg, 10, 0.9).unwrap();
        let row = mdp
            .transition_distribution(cfg.state(5, false), ActionId(cfg.freeze_action()))
            .unwrap();
        assert_eq!(row.len(), 16);
        for &(s, p) in row {
            assert_eq!(p, 1.0 / 16.0);
            assert!(s.0 >= 16);
        }
    }

    #[test]
    fn frozen_ignores_actions() {
        let cfg = TorusFreezeConfig::default();
        let mdp = build_torus_freeze(&cfg, 10, 0.9).unwrap();
        let s = cfg.state(9, true);
        for a in mdp.actions() {
            assert_eq!(mdp.transition_distribution(s, a).unwrap(), &[(s, 1.0)]);
        }
        assert_eq!(mdp.goal_of(s), mdp.goal_of(cfg.state(9, false)));
    }

    #[test]
    fn distance_wraps() {
        let cfg = TorusFreezeConfig::default();
        assert_eq!(cfg.distance(0, cfg.cell(&[7, 0])), 1);
        assert_eq!(cfg.distance(0, cfg.cell(&[4, 4])), 8);
    }
}
