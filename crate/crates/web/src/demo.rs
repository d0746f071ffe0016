//! Demo logic, kept free of wasm types so it runs in native tests.

use serde::Serialize;
use usher::agents::{Agent, AgentKind, LearnerConfig};
use usher::env::{build_risky_gridworld, parse_grid_map, Cell, GridMap};
use usher::harness::{hazard_mdp, reference_policy};
use usher::oracle::{bias_estimate, nominal_path, verify_bias_ratio, BiasRatioParams, OptimalPolicy, Scope};
use usher::{GoalId, MultiGoalMdp, Rng, StateId};

pub const HORIZON: usize = 30;
pub const DISCOUNT: f64 = 0.825;

#[derive(Serialize)]
pub struct GridView {
    pub width: usize,
    pub height: usize,
    /// Row-major cell symbols.
    pub cells: Vec<char>,
    /// Row-major values at the start of an episode; `None` on walls.
    pub values: Vec<Option<f64>>,
    /// `[row, col]` cells along the nominal greedy path.
    pub path: Vec<[usize; 2]>,
    pub start_value: f64,
}

fn symbol(c: Cell) -> char {
    match c {
        Cell::Free => '.',
        Cell::Wall => '#',
        Cell::Start => 'S',
        Cell::Goal => 'G',
        Cell::Hazard => '!',
    }
}

fn build(map_text: &str, hazard_stop_prob: f64) -> Result<(GridMap, MultiGoalMdp), String> {
    let mut map = parse_grid_map(map_text).map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&hazard_stop_prob) {
        return Err(format!("hazard probability {hazard_stop_prob} outside [0, 1]"));
    }
    map.hazard_stop_prob = hazard_stop_prob;
    let mdp = build_risky_gridworld(&map, HORIZON, DISCOUNT).map_err(|e| e.to_string())?;
    Ok((map, mdp))
}

fn view(
    map: &GridMap,
    mdp: &MultiGoalMdp,
    value: &dyn Fn(StateId) -> f64,
    policy: &dyn usher::policy::Policy,
) -> GridView {
    let g = mdp.policy_goal_distribution()[0].0;
    let start = mdp.start_distribution()[0].0;
    let (w, h) = (map.width(), map.height());
    let mut cells = Vec::with_capacity(w * h);
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            cells.push(symbol(map.cell(r, c)));
            values.push(map.state_of_cell(r, c).map(value));
        }
    }
    let path = nominal_path(mdp, policy, start, g)
        .into_iter()
        .filter_map(|s| map.cell_of_state(s).map(|(r, c)| [r, c]))
        .collect();
    GridView {
        width: w,
        height: h,
        cells,
        values,
        path,
        start_value: value(start),
    }
}

/// Exact optimal values and path for the first policy goal of a map.
pub fn oracle_view(map_text: &str, hazard_stop_prob: f64) -> Result<String, String> {
    let (map, mdp) = build(map_text, hazard_stop_prob)?;
    let opt = OptimalPolicy::solve(&mdp);
    let g = mdp.policy_goal_distribution()[0].0;
    let exact = opt.exact(g);
    let v = view(&map, &mdp, &|s| exact.value(s, HORIZON), &opt);
    Ok(serde_json::to_string(&v).expect("view serializes"))
}

#[derive(Serialize)]
pub struct Progress {
    pub episode: u64,
    pub bias: f64,
    pub bias_ci: f64,
    pub mean_return: f64,
    pub start_value: f64,
}

/// An agent trained a few episodes at a time.
pub struct Trainer {
    map: GridMap,
    mdp: MultiGoalMdp,
    agent: Agent,
    rng: Rng,
    eval_rng: Rng,
}

impl Trainer {
    pub fn new(
        map_text: &str,
        hazard_stop_prob: f64,
        kind: &str,
        seed: u64,
        batches_per_episode: usize,
    ) -> Result<Self, String> {
        let (map, mdp) = build(map_text, hazard_stop_prob)?;
        let kind: AgentKind = kind.parse().map_err(|e: usher::Error| e.to_string())?;
        let cfg = LearnerConfig {
            batches_per_episode,
            ..Default::default()
        };
        let agent = Agent::new(kind, cfg, &mdp).map_err(|e| e.to_string())?;
        let rng = Rng::new(seed);
        let eval_rng = rng.fork(1);
        Ok(Self {
            map,
            mdp,
            agent,
            rng,
            eval_rng,
        })
    }

    /// Trains `episodes` more episodes and measures the start-state bias.
    pub fn step(&mut self, episodes: u32, eval_episodes: usize) -> Result<String, String> {
        for _ in 0..episodes {
            self.agent
                .run_episode(&self.mdp, &mut self.rng)
                .map_err(|e| e.to_string())?;
        }
        let q = self.agent.q();
        let policy = q.greedy();
        let predict = |s: StateId, g: GoalId| q.value(s, g, HORIZON);
        let b = bias_estimate(&predict, &self.mdp, &policy, eval_episodes.max(1), &mut self.eval_rng);
        let p = Progress {
            episode: self.agent.episodes(),
            bias: b.bias,
            bias_ci: b.ci_half_width,
            mean_return: b.mean_return,
            start_value: b.mean_prediction,
        };
        Ok(serde_json::to_string(&p).expect("progress serializes"))
    }

    /// Learned values and greedy path, in the same shape as [`oracle_view`].
    pub fn view(&self) -> String {
        let q = self.agent.q();
        let g = self.mdp.policy_goal_distribution()[0].0;
        let v = view(&self.map, &self.mdp, &|s| q.value(s, g, HORIZON), &q.greedy());
        serde_json::to_string(&v).expect("view serializes")
    }
}

#[derive(Serialize)]
pub struct RatioBin {
    pub state: usize,
    pub action: usize,
    pub reward_goal: usize,
    pub steps_left: usize,
    pub visits: u64,
    pub g_p: usize,
    /// `(next state, observed frequency, predicted probability, z-score)`.
    pub next: Vec<(usize, f64, f64, f64)>,
}

/// Monte-Carlo check of the hindsight sampling law on the four-state
/// hazard MDP, returning the checked bins.
pub fn bias_ratio_bins(trajectories: usize, seed: u64) -> String {
    let mdp = hazard_mdp();
    let policy = reference_policy(&mdp, 0.3);
    let params = BiasRatioParams {
        trajectories,
        ..Default::default()
    };
    let report = verify_bias_ratio(&mdp, &policy, params, &mut Rng::new(seed));
    let bins: Vec<RatioBin> = report
        .bins
        .iter()
        .filter(|b| b.key.scope == Scope::Hindsight)
        .map(|b| RatioBin {
            state: b.key.s.0,
            action: b.key.a.0,
            reward_goal: b.key.g_r.0,
            g_p: b.key.g_p.0,
            steps_left: b.key.t,
            visits: b.visits,
            next: b
                .outcomes
                .iter()
                .map(|&(s, obs, pred, z)| (s.0, obs, pred, z))
                .collect(),
        })
        .collect();
    serde_json::to_string(&bins).expect("bins serialize")
}
