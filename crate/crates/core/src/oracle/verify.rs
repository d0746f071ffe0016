//! Statistical and exact checks of the hindsight sampling law and of the
//! importance-weight mixture identity.

use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::density::compute_w;
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::policy::{sample_action, Policy};
use crate::replay::{relabel_her, GoalSource, Trajectory};
use crate::rng::Rng;

use super::dp::{exact_successor_density, ExactF};

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured <= bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            pass: measured <= bound,
        }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            pass: measured >= bound,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} measured={:.6e} bound={:.6e} {}",
            self.name,
            self.measured,
            self.bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Which relabeled samples a bin collects.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Every relabeled goal; predicted with the keep branch mixed in.
    All,
    /// Only goals drawn from the future of the trajectory.
    Hindsight,
    /// Only the kept policy goal; the law should be `P(s'|s,a)` itself.
    Kept,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinKey {
    pub scope: Scope,
    pub s: StateId,
    pub a: ActionId,
    pub g_r: GoalId,
    pub g_p: GoalId,
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub key: BinKey,
    pub visits: u64,
    /// `(s', observed frequency, predicted probability, z-score)`.
    pub outcomes: Vec<(StateId, f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasRatioReport {
    pub trajectories: usize,
    pub min_visits: u64,
    pub bins: Vec<BinResult>,
    /// Bins with fewer than `min_visits` samples; reported, not asserted.
    pub sparse_bins: Vec<(BinKey, u64)>,
    pub max_abs_z: f64,
    pub max_abs_deviation: f64,
    pub z_bound: f64,
}

impl BiasRatioReport {
    pub fn passed(&self) -> bool {
        !self.bins.is_empty() && self.max_abs_z <= self.z_bound
    }

    pub fn bin(&self, key: &BinKey) -> Option<&BinResult> {
        self.bins.iter().find(|b| &b.key == key)
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("bias_ratio.max_abs_z", self.max_abs_z, self.z_bound),
            Check::at_least("bias_ratio.asserted_bins", self.bins.len() as f64, 1.0),
        ]
    }
}

/// Parameters of [`verify_bias_ratio`].
#[derive(Copy, Clone, Debug)]
pub struct BiasRatioParams {
    pub trajectories: usize,
    pub k: usize,
    pub min_visits: u64,
    pub z_bound: f64,
}

impl Default for BiasRatioParams {
    fn default() -> Self {
        Self {
            trajectories: 1_000_000,
            k: 8,
            min_visits: 100,
            z_bound: 3.0,
        }
    }
}

/// Simulates HER relabeling and compares the empirical law of `s'` given
/// `(s, a, g_r, g_p, T)` with `P(s'|s,a) · q'(g_r | s') / q(g_r | s, a)`,
/// where `q` and `q'` are the relabeling laws before and after observing
/// `s'`, derived from the exact successor density.
pub fn verify_bias_ratio(
    mdp: &MultiGoalMdp,
    policy: &dyn Policy,
    params: BiasRatioParams,
    rng: &mut Rng,
) -> BiasRatioReport {
    let horizon = mdp.horizon();
    let ns = mdp.num_states();
    let mut counts: FxHashMap<BinKey, Vec<u64>> = FxHashMap::default();
    let mut probs = vec![0.0; mdp.num_actions()];
    for ep in 0..params.trajectories {
        let g_p = mdp.sample_policy_goal(rng);
        let mut s = mdp.sample_start(rng);
        let mut traj = Trajectory::new(g_p, horizon, ep as u64);
        for step in 0..horizon {
            let a = sample_action(policy, s, g_p, horizon - step, &mut probs, rng);
            let n = mdp.step(s, a, rng);
            traj.push(s, a, n);
            if mdp.is_terminal(n) {
                break;
            }
            s = n;
        }
        for (i, tr) in traj.transitions().iter().enumerate() {
            let sample = relabel_her(mdp, &traj, i, params.k, rng);
            let scope = match sample.source {
                GoalSource::KeptPolicyGoal => Scope::Kept,
                _ => Scope::Hindsight,
            };
            for scope in [Scope::All, scope] {
                let key = BinKey {
                    scope,
                    s: tr.s,
                    a: tr.a,
                    g_r: sample.goal,
                    g_p,
                    t: tr.t_remaining,
                };
                counts.entry(key).or_insert_with(|| vec![0; ns])[tr.s_next.0] += 1;
            }
        }
    }

    let keep = 1.0 / (params.k as f64 + 1.0);
    let mut densities: FxHashMap<GoalId, ExactF> = FxHashMap::default();
    let mut keys: Vec<BinKey> = counts.keys().copied().collect();
    keys.sort();
    let mut report = BiasRatioReport {
        trajectories: params.trajectories,
        min_visits: params.min_visits,
        bins: Vec::new(),
        sparse_bins: Vec::new(),
        max_abs_z: 0.0,
        max_abs_deviation: 0.0,
        z_bound: params.z_bound,
    };
    for key in keys {
        let c = &counts[&key];
        let visits: u64 = c.iter().sum();
        if visits < params.min_visits {
            report.sparse_bins.push((key, visits));
            continue;
        }
        let f = densities
            .entry(key.g_p)
            .or_insert_with(|| exact_successor_density(mdp, policy, key.g_p, horizon));
        let law = |f_val: f64| match key.scope {
            Scope::All => {
                let kept = if key.g_r == key.g_p { keep } else { 0.0 };
                kept + (1.0 - keep) * f_val
            }
            Scope::Hindsight => f_val,
            Scope::Kept => 1.0,
        };
        let here = law(f.row(key.s, key.a, key.t)[key.g_r.0]);
        let mut outcomes = Vec::new();
        for &(n, p) in mdp.row(key.s, key.a) {
            let next = law(f.shifted(mdp, policy, n, key.t)[key.g_r.0]);
            let predicted = if here > 0.0 { p * next / here } else { f64::NAN };
            let observed = c[n.0] as f64 / visits as f64;
            let sd = (predicted * (1.0 - predicted) / visits as f64).sqrt();
            let dev = observed - predicted;
            let z = if sd > 0.0 {
                dev / sd
            } else if dev.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            report.max_abs_z = report.max_abs_z.max(z.abs());
            report.max_abs_deviation = report.max_abs_deviation.max(dev.abs());
            outcomes.push((n, observed, predicted, z));
        }
        // Successors outside the row would show up as unexplained mass.
        let explained: u64 = mdp.row(key.s, key.a).iter().map(|&(n, _)| c[n.0]).sum();
        if explained != visits {
            report.max_abs_z = f64::INFINITY;
        }
        report.bins.push(BinResult {
            key,
            visits,
            outcomes,
        });
    }
    report
}

/// A weight formula `(here, next, α) -> W`, swappable to test the checks.
pub type WeightFn = fn(f64, f64, f64) -> f64;

pub fn default_weight(here: f64, next: f64, alpha: f64) -> f64 {
    compute_w(here, next, alpha).expect("densities are non-negative")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub alpha: f64,
    pub evaluated: usize,
    /// Reward goals the sampler can never produce at that key.
    pub skipped_off_support: usize,
    pub max_abs_discrepancy: f64,
}

/// Checks, by exact summation, that mixing the true next-state law (weight
/// `α`) with the hindsight-conditioned law (weight `1-α`), each reweighted
/// by `W`, reproduces `E[F(s')]` for every test function `F`.
///
/// The conditioned law is computed by Bayes' rule from the sampler's law
/// after observing `s'`, independently of the density at `(s, a)` that
/// enters `W`.
#[allow(clippy::too_many_arguments)]
pub fn verify_mixture_identity(
    mdp: &MultiGoalMdp,
    policy: &dyn Policy,
    policy_goals: &[GoalId],
    alpha: f64,
    keep_prob: Option<f64>,
    test_functions: &[Vec<f64>],
    weight: WeightFn,
) -> MixtureReport {
    let horizon = mdp.horizon();
    let mut report = MixtureReport {
        alpha,
        evaluated: 0,
        skipped_off_support: 0,
        max_abs_discrepancy: 0.0,
    };
    for &g_p in policy_goals {
        let f = exact_successor_density(mdp, policy, g_p, horizon);
        for t in 1..=horizon {
            for s in mdp.states() {
                for a in mdp.actions() {
                    let row = mdp.row(s, a);
                    let shifted: Vec<Vec<f64>> =
                        row.iter().map(|&(n, _)| f.shifted(mdp, policy, n, t)).collect();
                    for g_r in mdp.goals() {
                        let law = |v: f64| match keep_prob {
                            Some(kp) => (if g_r == g_p { kp } else { 0.0 }) + (1.0 - kp) * v,
                            None => v,
                        };
                        let here = law(f.row(s, a, t)[g_r.0]);
                        let next: Vec<f64> = shifted.iter().map(|v| law(v[g_r.0])).collect();
                        let evidence: f64 = row.iter().zip(&next).map(|(&(_, p), q)| p * q).sum();
                        if evidence <= 0.0 {
                            report.skipped_off_support += 1;
                            continue;
                        }
                        for func in test_functions {
                            let mut lhs = 0.0;
                            let mut rhs = 0.0;
                            for (&(n, p), &q) in row.iter().zip(&next) {
                                let w = weight(here, q, alpha);
                                let conditioned = p * q / evidence;
                                lhs += (alpha * p + (1.0 - alpha) * conditioned) * w * func[n.0];
                                rhs += p * func[n.0];
                            }
                            report.max_abs_discrepancy =
                                report.max_abs_discrepancy.max((lhs - rhs).abs());
                            report.evaluated += 1;
                        }
                    }
                }
            }
        }
    }
    report
}

/// Test functions over states: a constant, the indicator of each absorbing
/// state, and a fixed pseudo-random bounded function.
pub fn standard_test_functions(mdp: &MultiGoalMdp, seed: u64) -> Vec<Vec<f64>> {
    let ns = mdp.num_states();
    let mut out = vec![vec![1.0; ns]];
    for s in mdp.states().filter(|&s| mdp.is_terminal(s)) {
        let mut ind = vec![0.0; ns];
        ind[s.0] = 1.0;
        out.push(ind);
    }
    let mut rng = Rng::new(seed);
    out.push((0..ns).map(|_| 2.0 * rng.uniform() - 1.0).collect());
    out.push((0..ns).map(|s| (s % 3) as f64 - 1.0).collect());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_risky_gridworld, parse_grid_map};
    use crate::policy::ConstantPolicy;

    fn hazard() -> MultiGoalMdp {
        build_risky_gridworld(&parse_grid_map("S!G").unwrap(), 4, 0.9).unwrap()
    }

    #[test]
    fn mixture_identity_holds_and_detects_corruption() {
        let mdp = hazard();
        let pi = ConstantPolicy(ActionId(3));
        let fs = standard_test_functions(&mdp, 1);
        let goals: Vec<GoalId> = mdp.goals().collect();
        for alpha in [0.01, 0.1, 0.5, 1.0] {
            for keep in [None, Some(1.0 / 9.0)] {
                let r = verify_mixture_identity(&mdp, &pi, &goals, alpha, keep, &fs, default_weight);
                assert!(r.max_abs_discrepancy <= 1e-9, "{r:?}");
                assert!(r.evaluated > 0);
            }
        }
        let broken: WeightFn = |here, next, _| if next > 0.0 { here / next } else { 1.0 };
        let r = verify_mixture_identity(&mdp, &pi, &goals, 0.5, None, &fs, broken);
        assert!(r.max_abs_discrepancy > 1e-3);
    }

    #[test]
    fn deterministic_law_is_unchanged() {
        let mdp = build_risky_gridworld(&parse_grid_map("S..G").unwrap(), 4, 0.9).unwrap();
        let pi = ConstantPolicy(ActionId(3));
        let params = BiasRatioParams {
            trajectories: 2000,
            ..Default::default()
        };
        let r = verify_bias_ratio(&mdp, &pi, params, &mut Rng::new(9));
        assert!(r.passed());
        assert_eq!(r.max_abs_deviation, 0.0);
    }
}
