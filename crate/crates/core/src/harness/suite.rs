//! The verification suite behind `usher verify`, and exact-table dumps.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{clip_ratio, compute_w, LearnerConfig};
use crate::density::{FTable, SampledUpdate};
use crate::env::{
    build_red_light, build_risky_gridworld, build_torus_freeze, default_risky_map, parse_grid_map,
    RedLightConfig, TorusFreezeConfig,
};
use crate::error::{Error, Result};
use crate::mdp::{GoalId, MultiGoalMdp};
use crate::oracle::{
    exact_successor_density, standard_test_functions, verify_bias_ratio, verify_mixture_identity,
    BiasRatioParams, Check, OptimalPolicy, WeightFn,
};
use crate::policy::{sample_action, EpsilonGreedy, Policy};
use crate::replay::{relabel_her, sample_uniform_goal, Trajectory};
use crate::rng::Rng;

pub const IDENTITY_ALPHAS: [f64; 4] = [0.01, 0.1, 0.5, 1.0];

/// Small environments small enough for exact summation over every key.
pub fn bundled_small_mdps() -> Vec<MultiGoalMdp> {
    let grid = |text: &str, h| build_risky_gridworld(&parse_grid_map(text).unwrap(), h, 0.9);
    let red = RedLightConfig {
        road_length: 3,
        intersection_cell: 1,
        phase_lengths: [1, 1, 2],
        ..Default::default()
    };
    let torus = TorusFreezeConfig {
        dims: 1,
        cells_per_dim: 4,
        min_goal_distance: 1,
        ..Default::default()
    };
    vec![
        hazard_mdp(),
        grid("S..G", 5).unwrap(),
        grid("S!.\n..G", 6).unwrap(),
        build_red_light(&red, 6, 0.9).unwrap(),
        build_torus_freeze(&torus, 5, 0.9).unwrap(),
    ]
}

/// The four-state hazard MDP: start, hazard, goal and the fail state.
pub fn hazard_mdp() -> MultiGoalMdp {
    build_risky_gridworld(&parse_grid_map("S!G").unwrap(), 4, 0.9).unwrap()
}

/// The optimal policy mixed with uniform actions, so that every action has
/// mass and the densities are not degenerate.
pub fn reference_policy(mdp: &MultiGoalMdp, epsilon: f64) -> EpsilonGreedy<OptimalPolicy> {
    EpsilonGreedy {
        base: OptimalPolicy::solve(mdp),
        epsilon,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub bias_ratio_trajectories: usize,
    pub dense_updates: usize,
    pub sampled_updates: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            bias_ratio_trajectories: 1_000_000,
            dense_updates: 200_000,
            sampled_updates: 200_000,
        }
    }
}

/// Exact mixture-identity checks on every bundled MDP and `α`, with and
/// without the kept policy-goal branch in the sampler's law.
pub fn mixture_identity_checks(weight: WeightFn, k: usize) -> Vec<Check> {
    let keep = 1.0 / (k as f64 + 1.0);
    let mut out = Vec::new();
    for mdp in bundled_small_mdps() {
        let policy = reference_policy(&mdp, 0.3);
        let goals: Vec<GoalId> = mdp.policy_goal_distribution().iter().map(|&(g, _)| g).collect();
        let funcs = standard_test_functions(&mdp, 7);
        for alpha in IDENTITY_ALPHAS {
            for (tag, kp) in [("hindsight", None), ("with_keep", Some(keep))] {
                let r = verify_mixture_identity(&mdp, &policy, &goals, alpha, kp, &funcs, weight);
                let name = format!("mixture_identity[{},alpha={alpha},{tag}]", mdp.name());
                let measured = if r.evaluated == 0 { f64::INFINITY } else { r.max_abs_discrepancy };
                out.push(Check::at_most(name, measured, 1e-9));
            }
        }
        out.push(Check::at_least(
            format!("test_functions[{}]", mdp.name()),
            funcs.len() as f64,
            3.0,
        ));
    }
    out
}

pub fn bias_ratio_checks(trajectories: usize, seed: u64) -> Vec<Check> {
    let mdp = hazard_mdp();
    let policy = reference_policy(&mdp, 0.3);
    let params = BiasRatioParams {
        trajectories,
        ..Default::default()
    };
    verify_bias_ratio(&mdp, &policy, params, &mut Rng::new(seed)).checks()
}

/// One episode of `policy` from a sampled start and policy goal.
fn episode(mdp: &MultiGoalMdp, policy: &dyn Policy, id: u64, rng: &mut Rng) -> Trajectory {
    let mut probs = vec![0.0; mdp.num_actions()];
    let h = mdp.horizon();
    let g_p = mdp.sample_policy_goal(rng);
    let mut s = mdp.sample_start(rng);
    let mut traj = Trajectory::new(g_p, h, id);
    for step in 0..h {
        let a = sample_action(policy, s, g_p, h - step, &mut probs, rng);
        let n = mdp.sample_step(s, a, rng).expect("valid indices");
        traj.push(s, a, n);
        if mdp.is_terminal(n) {
            break;
        }
        s = n;
    }
    traj
}

/// Worst L1 gap between learned and exact rows over rows updated at least
/// `min_visits` times, and how many rows qualified.
fn density_gap(mdp: &MultiGoalMdp, policy: &dyn Policy, f: &FTable, min_visits: u32) -> (f64, usize) {
    let mut exact = Vec::new();
    for &(g, _) in mdp.policy_goal_distribution() {
        exact.push((g, exact_successor_density(mdp, policy, g, mdp.horizon())));
    }
    let (mut worst, mut rows) = (0.0f64, 0);
    for (key, learned) in f.rows() {
        if f.visits(key.s, key.a, key.g_p, key.t) < min_visits {
            continue;
        }
        let ex = &exact.iter().find(|(g, _)| *g == key.g_p).expect("policy goal").1;
        let gap: f64 = learned
            .iter()
            .zip(ex.row(key.s, key.a, key.t))
            .map(|(a, b)| (a - b).abs())
            .sum();
        worst = worst.max(gap);
        rows += 1;
    }
    (worst, rows)
}

/// Density schedule for the convergence checks. Decays faster than the
/// training default, which favours tracking a moving policy.
fn check_schedule() -> LearnerConfig {
    LearnerConfig {
        density_lr_decay: 0.8,
        ..Default::default()
    }
}

/// Dense density updates on the default risky map under the policy that
/// takes the hazard corridor.
///
/// Transitions come from fresh episodes of the policy, replayed last step
/// first so each bootstrap target has already seen that episode's suffix.
pub fn dense_density_check(updates: usize, seed: u64) -> Vec<Check> {
    let mdp = build_risky_gridworld(&default_risky_map(), 30, 0.825).unwrap();
    // Optimal when the hazard is harmless, so it walks through the hazard.
    let mut naive_map = default_risky_map();
    naive_map.hazard_stop_prob = 0.0;
    let policy = OptimalPolicy::solve(&build_risky_gridworld(&naive_map, 30, 0.825).unwrap());
    let mut rng = Rng::new(seed);
    let mut f = FTable::for_mdp(&mdp);
    let cfg = check_schedule();
    let (mut done, mut id) = (0, 0);
    while done < updates {
        let traj = episode(&mdp, &policy, id, &mut rng);
        id += 1;
        for tr in traj.transitions().iter().rev().take(updates - done) {
            let lr = cfg.density_lr(f.visits(tr.s, tr.a, tr.g_p, tr.t_remaining));
            f.update_dense(&mdp, tr, &policy, lr).expect("valid update");
            done += 1;
        }
    }
    let (gap, rows) = density_gap(&mdp, &policy, &f, 100);
    vec![
        Check::at_most("density_dense_l1[risky-gridworld]", gap, 0.02),
        Check::at_least("density_dense_rows_checked", rows as f64, 1.0),
    ]
}

/// Sampled density updates with hindsight goals on a five-state chain.
pub fn sampled_density_check(updates: usize, seed: u64) -> Vec<Check> {
    let mdp = build_risky_gridworld(&parse_grid_map("S...G").unwrap(), 6, 0.9).unwrap();
    let policy = reference_policy(&mdp, 0.5);
    let mut rng = Rng::new(seed);
    let mut f = FTable::for_mdp(&mdp);
    let cfg = check_schedule();
    let (mut done, mut id) = (0, 0);
    while done < updates {
        let traj = episode(&mdp, &policy, id, &mut rng);
        id += 1;
        for step in (0..traj.len()).rev().take(updates - done) {
            let tr = traj.transitions()[step];
            let params = SampledUpdate {
                g_r: relabel_her(&mdp, &traj, step, cfg.k, &mut rng).goal,
                g_r_alt: sample_uniform_goal(mdp.num_goals(), &mut rng).goal,
                lr: cfg.density_lr(f.visits(tr.s, tr.a, tr.g_p, tr.t_remaining)),
                alpha_f: cfg.alpha_f,
                keep_prob: cfg.keep_prob(),
            };
            f.update_sampled(&mdp, &tr, &policy, &params).expect("valid update");
            done += 1;
        }
    }
    let (gap, rows) = density_gap(&mdp, &policy, &f, 100);
    vec![
        Check::at_most("density_sampled_l1[chain5]", gap, 0.05),
        Check::at_least("density_sampled_rows_checked", rows as f64, 1.0),
    ]
}

/// Clipping and weight properties on a grid of inputs.
pub fn weight_property_checks() -> Vec<Check> {
    let ws = [0.0, 1e-3, 0.3, 0.7692, 1.0, 1.2, 1.3, 2.0, 1e3];
    let cs = [0.01, 0.3, 1.0, 100.0];
    let (mut idem, mut mono, mut alpha_one) = (0.0f64, 0.0f64, 0.0f64);
    for c in cs {
        let mut prev = f64::NEG_INFINITY;
        for w in ws {
            let once = clip_ratio(w, c);
            idem = idem.max((clip_ratio(once, c) - once).abs());
            mono = mono.max(prev - once);
            prev = once;
        }
    }
    for here in [1e-6, 0.1, 0.5, 1.0] {
        for next in [0.0, 0.2, 1.0] {
            let w = compute_w(here, next, 1.0).expect("non-negative");
            alpha_one = alpha_one.max((w - 1.0).abs());
        }
    }
    vec![
        Check::at_most("clip_idempotence", idem, 0.0),
        Check::at_most("clip_monotonicity_violation", mono.max(0.0), 0.0),
        Check::at_most("w_alpha_one", alpha_one, 0.0),
    ]
}

pub fn run_verification_suite(cfg: &SuiteConfig) -> Vec<Check> {
    let mut checks = weight_property_checks();
    checks.extend(mixture_identity_checks(crate::oracle::default_weight, 8));
    checks.extend(bias_ratio_checks(cfg.bias_ratio_trajectories, cfg.seed));
    checks.extend(dense_density_check(cfg.dense_updates, cfg.seed));
    checks.extend(sampled_density_check(cfg.sampled_updates, cfg.seed));
    checks
}

/// One line per check.
pub fn format_report(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        writeln!(out, "{c}").unwrap();
    }
    out
}

/// Writes `q_star.csv` with `state,action,goal,steps_left,value` for every
/// policy goal at the full horizon, and `f_star.ftab` with the optimal
/// policy's successor densities when they fit in `max_f_entries`.
pub fn dump_oracle(mdp: &MultiGoalMdp, dir: &Path, max_f_entries: usize) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let opt = OptimalPolicy::solve(mdp);
    let h = mdp.horizon();
    let mut csv = String::from("state,action,goal,steps_left,value\n");
    for &(g, _) in mdp.policy_goal_distribution() {
        let q = opt.exact(g);
        for s in mdp.states() {
            for a in mdp.actions() {
                writeln!(csv, "{},{},{},{h},{}", s.0, a.0, g.0, q.q(s, a, h)).unwrap();
            }
        }
    }
    let q_path = dir.join("q_star.csv");
    std::fs::write(&q_path, csv).map_err(|e| Error::io(&q_path, e))?;
    let mut written = vec![q_path.display().to_string()];

    let goals = mdp.policy_goal_distribution();
    let entries = mdp.num_states() * mdp.num_actions() * goals.len() * h * mdp.num_goals();
    if entries <= max_f_entries {
        let mut f = FTable::for_mdp(mdp);
        for &(g, _) in goals {
            let ex = exact_successor_density(mdp, &opt, g, h);
            for t in 1..=h {
                for s in mdp.states() {
                    for a in mdp.actions() {
                        let key = crate::density::RowKey { s, a, g_p: g, t };
                        f.set_row(key, ex.row(s, a, t))?;
                    }
                }
            }
        }
        let f_path = dir.join("f_star.ftab");
        f.save(&f_path)?;
        written.push(f_path.display().to_string());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_mdps_include_four_state_hazard() {
        assert_eq!(hazard_mdp().num_states(), 4);
        assert!(bundled_small_mdps().len() >= 4);
    }

    #[test]
    fn property_checks_pass() {
        assert!(weight_property_checks().iter().all(|c| c.pass));
    }

    #[test]
    fn corrupted_weight_fails_identity() {
        fn corrupt(here: f64, next: f64, alpha: f64) -> f64 {
            crate::oracle::default_weight(here, next, alpha) * 1.01
        }
        let checks = mixture_identity_checks(corrupt, 8);
        assert!(checks.iter().any(|c| !c.pass));
    }

    #[test]
    fn oracle_dump_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let written = dump_oracle(&hazard_mdp(), dir.path(), 1 << 20).unwrap();
        assert_eq!(written.len(), 2);
        let f = FTable::load(&dir.path().join("f_star.ftab")).unwrap();
        assert_eq!(f.num_goals(), hazard_mdp().num_goals());
        let csv = std::fs::read_to_string(dir.path().join("q_star.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4 * 5);
    }
}
