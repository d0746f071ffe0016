//! A one-lane road with a traffic light at one cell.
//!
//! State is `(cell, phase)`: the light cycles green, yellow, red with one
//! environment step per phase tick. After each step, a car standing on the
//! intersection cell while the light shows red crashes with `crash_prob`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{GoalId, MdpSpec, MultiGoalMdp, StateId};

pub const RED_LIGHT_ACTIONS: [&str; 2] = ["forward", "stay"];

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Light {
    Green,
    Yellow,
    Red,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedLightConfig {
    pub road_length: usize,
    pub intersection_cell: usize,
    /// Green, yellow and red durations in steps.
    pub phase_lengths: [usize; 3],
    pub crash_prob: f64,
    pub random_initial_phase: bool,
    /// Road cells that may be drawn as policy goals. Defaults to the last
    /// cell.
    pub goal_cells: Option<Vec<usize>>,
}

impl Default for RedLightConfig {
    fn default() -> Self {
        Self {
            road_length: 6,
            intersection_cell: 3,
            phase_lengths: [1, 1, 4],
            crash_prob: 0.75,
            random_initial_phase: true,
            goal_cells: None,
        }
    }
}

impl RedLightConfig {
    pub fn period(&self) -> usize {
        self.phase_lengths.iter().sum()
    }

    pub fn light(&self, phase: usize) -> Light {
        let [g, y, _] = self.phase_lengths;
        match phase % self.period() {
            p if p < g => Light::Green,
            p if p < g + y => Light::Yellow,
            _ => Light::Red,
        }
    }

    pub fn state(&self, cell: usize, phase: usize) -> StateId {
        StateId(cell * self.period() + phase)
    }

    /// `(cell, phase)` of a road state; `None` for the crash state.
    pub fn decode(&self, s: StateId) -> Option<(usize, usize)> {
        let p = self.period();
        (s.0 < self.road_length * p).then(|| (s.0 / p, s.0 % p))
    }

    pub fn crash_state(&self) -> StateId {
        StateId(self.road_length * self.period())
    }

    fn validate(&self) -> Result<()> {
        if self.road_length == 0 || self.intersection_cell >= self.road_length {
            return Err(Error::InvalidMdp(format!(
                "intersection cell {} must lie on a road of length {}",
                self.intersection_cell, self.road_length
            )));
        }
        if self.phase_lengths.contains(&0) {
            return Err(Error::InvalidMdp("light phases must last at least one step".into()));
        }
        if !(0.0..=1.0).contains(&self.crash_prob) {
            return Err(Error::InvalidMdp(format!("crash probability {}", self.crash_prob)));
        }
        if let Some(cells) = &self.goal_cells {
            if cells.is_empty() || cells.iter().any(|&c| c >= self.road_length) {
                return Err(Error::InvalidMdp("goal cells must be non-empty road cells".into()));
            }
        }
        Ok(())
    }
}

pub fn build_red_light(cfg: &RedLightConfig, horizon: usize, discount: f64) -> Result<MultiGoalMdp> {
    cfg.validate()?;
    let period = cfg.period();
    let crash = cfg.crash_state();
    let num_states = crash.0 + 1;
    let mut transitions = Vec::with_capacity(num_states * 2);
    let mut labels = Vec::with_capacity(num_states);

    for cell in 0..cfg.road_length {
        for phase in 0..period {
            labels.push(format!("c{cell}/{:?}{phase}", cfg.light(phase)));
            for forward in [true, false] {
                let next_cell = if forward {
                    (cell + 1).min(cfg.road_length - 1)
                } else {
                    cell
                };
                let next_phase = (phase + 1) % period;
                let next = cfg.state(next_cell, next_phase);
                let at_risk = next_cell == cfg.intersection_cell
                    && cfg.light(next_phase) == Light::Red;
                transitions.push(if at_risk {
                    vec![(crash, cfg.crash_prob), (next, 1.0 - cfg.crash_prob)]
                } else {
                    vec![(next, 1.0)]
                });
            }
        }
    }
    labels.push("crash".into());
    transitions.push(vec![(crash, 1.0)]);
    transitions.push(vec![(crash, 1.0)]);

    let start = if cfg.random_initial_phase {
        let p = 1.0 / period as f64;
        (0..period).map(|ph| (cfg.state(0, ph), p)).collect()
    } else {
        vec![(cfg.state(0, 0), 1.0)]
    };
    let goal_cells = cfg
        .goal_cells
        .clone()
        .unwrap_or_else(|| vec![cfg.road_length - 1]);
    let pg = 1.0 / goal_cells.len() as f64;
    let mut goal_map: Vec<GoalId> = (0..num_states - 1).map(|s| GoalId(s / period)).collect();
    goal_map.push(GoalId(cfg.road_length));
    let mut terminal = vec![false; num_states];
    terminal[crash.0] = true;

    MultiGoalMdp::new(MdpSpec {
        name: "red-light".into(),
        num_states,
        num_actions: 2,
        num_goals: cfg.road_length + 1,
        start,
        transitions,
        goal_map,
        terminal,
        policy_goals: goal_cells.iter().map(|&c| (GoalId(c), pg)).collect(),
        horizon,
        discount,
        state_labels: labels,
        action_labels: RED_LIGHT_ACTIONS.iter().map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionId;

    const FORWARD: ActionId = ActionId(0);
    const STAY: ActionId = ActionId(1);

    #[test]
    fn light_cycle_has_period_six() {
        let cfg = RedLightConfig::default();
        assert_eq!(cfg.period(), 6);
        let lights: Vec<Light> = (0..12).map(|p| cfg.light(p)).collect();
        assert_eq!(lights[..6], lights[6..]);
        assert_eq!(lights[0], Light::Green);
        assert_eq!(lights[1], Light::Yellow);
        assert!(lights[2..6].iter().all(|&l| l == Light::Red));
    }

    #[test]
    fn leaving_intersection_is_deterministic() {
        let cfg = RedLightConfig::default();
        let mdp = build_red_light(&cfg, 20, 0.9).unwrap();
        let s = cfg.state(cfg.intersection_cell, 0);
        let row = mdp.transition_distribution(s, FORWARD).unwrap();
        assert_eq!(row, &[(cfg.state(cfg.intersection_cell + 1, 1), 1.0)]);
    }

    #[test]
    fn waiting_before_intersection_never_crashes() {
        let cfg = RedLightConfig::default();
        let mdp = build_red_light(&cfg, 20, 0.9).unwrap();
        for phase in 0..cfg.period() {
            let s = cfg.state(cfg.intersection_cell - 1, phase);
            let row = mdp.transition_distribution(s, STAY).unwrap();
            assert!(row.iter().all(|&(n, _)| n != cfg.crash_state()));
        }
    }

    #[test]
    fn entering_on_red_risks_crash() {
        let cfg = RedLightConfig::default();
        let mdp = build_red_light(&cfg, 20, 0.9).unwrap();
        // phase 1 -> 2 turns red as the car arrives.
        let s = cfg.state(cfg.intersection_cell - 1, 1);
        let dense = mdp.transition_dense(s, FORWARD).unwrap();
        assert_eq!(dense[cfg.crash_state().0], 0.75);
    }

    #[test]
    fn start_is_uniform_over_phases() {
        let mdp = build_red_light(&RedLightConfig::default(), 20, 0.9).unwrap();
        assert_eq!(mdp.start_distribution().len(), 6);
    }
}
