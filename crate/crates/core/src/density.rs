//! Tabular successor goal density `f(g_r | s, a, g_p, T)`.
//!
//! Row `(s, a, g_p, T)` is the law of the goal HER's "future" sampler picks
//! when it draws uniformly among the next `T` states after taking `a` in `s`
//! and following the policy for `g_p`. It satisfies
//!
//! ```text
//! f(· | s, a, g_p, T) = E_{s'} [ (1/T) onehot(φ(s')) + (1 - 1/T) f(· | s', π(s', g_p), g_p, T-1) ]
//! ```
//!
//! Rows that were never updated read as uniform `1/|G|`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ActionId, GoalId, MultiGoalMdp, StateId};
use crate::policy::Policy;
use crate::replay::Transition;

const UNSET: u32 = u32::MAX;
const DUMP_MAGIC: &[u8; 4] = b"FTAB";
const DUMP_VERSION: u32 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Exact expectation over goals for the sampled `s'`.
    #[default]
    Dense,
    /// Importance-weighted updates touching only the replayed goals.
    Sampled,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Rows {
    /// Arena slot per key, or `UNSET`.
    slots: Vec<u32>,
    data: Vec<f64>,
    /// Updates applied to each slot.
    visits: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct FTable {
    num_states: usize,
    num_actions: usize,
    num_goals: usize,
    horizon: usize,
    live: Rows,
    target: Option<Rows>,
    snapshot_interval: usize,
    updates_since_snapshot: usize,
    uniform: Vec<f64>,
    next: Vec<f64>,
    probs: Vec<f64>,
}

impl PartialEq for FTable {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.rows().eq(other.rows())
    }
}

/// Key of one stored row.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub s: StateId,
    pub a: ActionId,
    pub g_p: GoalId,
    pub t: usize,
}

/// Parameters of one sampled update besides the transition itself.
#[derive(Copy, Clone, Debug)]
pub struct SampledUpdate {
    pub g_r: GoalId,
    pub g_r_alt: GoalId,
    pub lr: f64,
    pub alpha_f: f64,
    /// HER's keep probability `1/(k+1)`.
    pub keep_prob: f64,
}

impl FTable {
    /// A table for `T` in `1..=horizon`.
    pub fn new(num_states: usize, num_actions: usize, num_goals: usize, horizon: usize) -> Self {
        let keys = num_goals * num_states * num_actions * horizon;
        Self {
            num_states,
            num_actions,
            num_goals,
            horizon,
            live: Rows {
                slots: vec![UNSET; keys],
                data: Vec::new(),
                visits: Vec::new(),
            },
            target: None,
            snapshot_interval: 0,
            updates_since_snapshot: 0,
            uniform: vec![1.0 / num_goals as f64; num_goals],
            next: vec![0.0; num_goals],
            probs: vec![0.0; num_actions],
        }
    }

    pub fn for_mdp(mdp: &MultiGoalMdp) -> Self {
        Self::new(mdp.num_states(), mdp.num_actions(), mdp.num_goals(), mdp.horizon())
    }

    /// Keep a target copy refreshed every `interval` updates. Zero routes
    /// every read to the live table.
    pub fn with_target_interval(mut self, interval: usize) -> Self {
        self.snapshot_interval = interval;
        self.target = (interval > 0).then(|| self.live.clone());
        self.updates_since_snapshot = 0;
        self
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.num_states, self.num_actions, self.num_goals, self.horizon)
    }

    pub fn num_goals(&self) -> usize {
        self.num_goals
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_materialized(&self) -> usize {
        self.live.data.len() / self.num_goals
    }

    fn key(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon);
        ((g_p.0 * self.num_states + s.0) * self.num_actions + a.0) * self.horizon + t - 1
    }

    fn check(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize) -> Result<()> {
        if t == 0 {
            return Err(Error::contract("density queried with T = 0"));
        }
        for (what, index, limit) in [
            ("state", s.0, self.num_states),
            ("action", a.0, self.num_actions),
            ("goal", g_p.0, self.num_goals),
            ("horizon", t, self.horizon + 1),
        ] {
            if index >= limit {
                return Err(Error::IndexOutOfRange { what, index, limit });
            }
        }
        Ok(())
    }

    fn lookup<'a>(&'a self, rows: &'a Rows, key: usize) -> &'a [f64] {
        match rows.slots[key] {
            UNSET => &self.uniform,
            slot => {
                let g = self.num_goals;
                &rows.data[slot as usize * g..(slot as usize + 1) * g]
            }
        }
    }

    /// The row reads and bootstraps use: the target copy when enabled.
    pub fn row(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize) -> &[f64] {
        let rows = self.target.as_ref().unwrap_or(&self.live);
        self.lookup(rows, self.key(s, a, g_p, t))
    }

    pub fn live_row(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize) -> &[f64] {
        self.lookup(&self.live, self.key(s, a, g_p, t))
    }

    /// `f(g_r | s, a, g_p, T)`.
    pub fn query(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize, g_r: GoalId) -> Result<f64> {
        self.check(s, a, g_p, t)?;
        if g_r.0 >= self.num_goals {
            return Err(Error::IndexOutOfRange {
                what: "goal",
                index: g_r.0,
                limit: self.num_goals,
            });
        }
        Ok(self.row(s, a, g_p, t)[g_r.0])
    }

    /// How many updates the live row has received.
    pub fn visits(&self, s: StateId, a: ActionId, g_p: GoalId, t: usize) -> u32 {
        match self.live.slots[self.key(s, a, g_p, t)] {
            UNSET => 0,
            slot => self.live.visits[slot as usize],
        }
    }

    fn row_mut(&mut self, key: usize) -> &mut [f64] {
        let g = self.num_goals;
        let slot = match self.live.slots[key] {
            UNSET => {
                let slot = self.live.data.len() / g;
                self.live.data.extend_from_slice(&self.uniform);
                self.live.visits.push(0);
                self.live.slots[key] = slot as u32;
                slot
            }
            slot => slot as usize,
        };
        &mut self.live.data[slot * g..(slot + 1) * g]
    }

    /// Overwrites a row, e.g. to seed it from an oracle.
    pub fn set_row(&mut self, key: RowKey, values: &[f64]) -> Result<()> {
        self.check(key.s, key.a, key.g_p, key.t)?;
        if values.len() != self.num_goals {
            return Err(Error::contract("row length differs from the goal count"));
        }
        let k = self.key(key.s, key.a, key.g_p, key.t);
        self.row_mut(k).copy_from_slice(values);
        Ok(())
    }

    /// Materialized live rows in key order.
    pub fn rows(&self) -> impl Iterator<Item = (RowKey, &[f64])> + '_ {
        let g = self.num_goals;
        self.live
            .slots
            .iter()
            .enumerate()
            .filter(|(_, &slot)| slot != UNSET)
            .map(move |(key, &slot)| {
                let t = key % self.horizon + 1;
                let rest = key / self.horizon;
                let a = rest % self.num_actions;
                let rest = rest / self.num_actions;
                let s = rest % self.num_states;
                let g_p = rest / self.num_states;
                let k = RowKey {
                    s: StateId(s),
                    a: ActionId(a),
                    g_p: GoalId(g_p),
                    t,
                };
                (k, &self.live.data[slot as usize * g..(slot as usize + 1) * g])
            })
    }

    pub fn snapshot_target(&mut self) {
        if let Some(target) = &mut self.target {
            target.clone_from(&self.live);
        }
        self.updates_since_snapshot = 0;
    }

    fn after_update(&mut self, key: usize) {
        let slot = self.live.slots[key] as usize;
        self.live.visits[slot] = self.live.visits[slot].saturating_add(1);
        if self.snapshot_interval > 0 {
            self.updates_since_snapshot += 1;
            if self.updates_since_snapshot >= self.snapshot_interval {
                self.snapshot_target();
            }
        }
    }

    /// Writes `f(· | s', π(s', g_p), g_p, T-1)` into `self.next`: the
    /// policy-averaged successor row, a point mass for absorbing `s'`, and
    /// zero when `T = 1`.
    fn fill_next(&mut self, mdp: &MultiGoalMdp, policy: &dyn Policy, tr: &Transition) {
        let mut next = std::mem::take(&mut self.next);
        next.fill(0.0);
        let t = tr.t_remaining;
        if t > 1 {
            if mdp.is_terminal(tr.s_next) {
                next[mdp.goal_of(tr.s_next).0] = 1.0;
            } else {
                let mut probs = std::mem::take(&mut self.probs);
                policy.action_probs(tr.s_next, tr.g_p, t - 1, &mut probs);
                for (a, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        let row = self.row(tr.s_next, ActionId(a), tr.g_p, t - 1);
                        for (n, &v) in next.iter_mut().zip(row) {
                            *n += p * v;
                        }
                    }
                }
                self.probs = probs;
            }
        }
        self.next = next;
    }

    /// The density of the future sampler one step later, seen from `s`:
    /// `(1/T) onehot(φ(s')) + (1 - 1/T) f(· | s', π, T-1)`. Left in
    /// `self.next`.
    fn fill_shifted(&mut self, mdp: &MultiGoalMdp, policy: &dyn Policy, tr: &Transition) {
        self.fill_next(mdp, policy, tr);
        let inv_t = 1.0 / tr.t_remaining as f64;
        for v in &mut self.next {
            *v *= 1.0 - inv_t;
        }
        self.next[mdp.goal_of(tr.s_next).0] += inv_t;
    }

    /// One entry of the successor term: `(1/T) 1{φ(s') = g} + (1 - 1/T)
    /// f(g | s', π, T-1)`, the density of the future sampler seen from `s`
    /// once `s'` is known.
    pub fn shifted_value(
        &self,
        mdp: &MultiGoalMdp,
        policy: &dyn Policy,
        tr: &Transition,
        g: GoalId,
    ) -> f64 {
        let t = tr.t_remaining;
        let inv_t = 1.0 / t as f64;
        let here = if mdp.goal_of(tr.s_next) == g { inv_t } else { 0.0 };
        if t == 1 {
            return here;
        }
        let next = if mdp.is_terminal(tr.s_next) {
            if mdp.goal_of(tr.s_next) == g { 1.0 } else { 0.0 }
        } else {
            let mut probs = vec![0.0; self.num_actions];
            policy.action_probs(tr.s_next, tr.g_p, t - 1, &mut probs);
            probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(a, &p)| p * self.row(tr.s_next, ActionId(a), tr.g_p, t - 1)[g.0])
                .sum()
        };
        here + (1.0 - inv_t) * next
    }

    /// The successor term of the recursion for this transition, as a full
    /// goal vector.
    pub fn shifted_row(&mut self, mdp: &MultiGoalMdp, policy: &dyn Policy, tr: &Transition) -> Vec<f64> {
        self.fill_shifted(mdp, policy, tr);
        self.next.clone()
    }

    /// One TD step toward the recursion target for the sampled `s'`.
    pub fn update_dense(
        &mut self,
        mdp: &MultiGoalMdp,
        tr: &Transition,
        policy: &dyn Policy,
        lr: f64,
    ) -> Result<()> {
        check_lr(lr)?;
        self.check(tr.s, tr.a, tr.g_p, tr.t_remaining)?;
        self.fill_shifted(mdp, policy, tr);
        let key = self.key(tr.s, tr.a, tr.g_p, tr.t_remaining);
        let next = std::mem::take(&mut self.next);
        let row = self.row_mut(key);
        for (v, &n) in row.iter_mut().zip(&next) {
            *v += lr * (n - *v);
        }
        self.next = next;
        self.after_update(key);
        Ok(())
    }

    /// An unbiased stochastic version of [`FTable::update_dense`] that
    /// touches only the replayed hindsight goal, the uniform goal and
    /// `φ(s')`.
    ///
    /// Both replayed goals come from the mixture `α_f·uniform + (1-α_f)·q`,
    /// where `q` is the hindsight sampler's law given `s'` (including the
    /// kept policy-goal branch). Each goal's entry moves by its TD error
    /// divided by the mixture density, so the expected step equals the
    /// dense one. Entries are clamped at zero and the row renormalized.
    pub fn update_sampled(
        &mut self,
        mdp: &MultiGoalMdp,
        tr: &Transition,
        policy: &dyn Policy,
        params: &SampledUpdate,
    ) -> Result<()> {
        let SampledUpdate {
            g_r,
            g_r_alt,
            lr,
            alpha_f,
            keep_prob,
        } = *params;
        if !(0.0..=1.0).contains(&lr) {
            return Err(Error::contract(format!("learning rate {lr} outside [0, 1]")));
        }
        if !(alpha_f > 0.0 && alpha_f <= 1.0) {
            return Err(Error::contract(format!("alpha_f {alpha_f} outside (0, 1]")));
        }
        self.check(tr.s, tr.a, tr.g_p, tr.t_remaining)?;
        if lr == 0.0 {
            return Ok(());
        }
        self.fill_next(mdp, policy, tr);
        let t = tr.t_remaining as f64;
        let n_goals = self.num_goals as f64;
        let uniform = 1.0 / n_goals;
        let achieved = mdp.goal_of(tr.s_next);
        let hindsight_law = |g: GoalId, next: &[f64]| {
            let shifted = (1.0 - 1.0 / t) * next[g.0] + if g == achieved { 1.0 / t } else { 0.0 };
            let kept = if g == tr.g_p { keep_prob } else { 0.0 };
            kept + (1.0 - keep_prob) * shifted
        };
        let mut steps = [(g_r, 0.0, 0.0), (g_r_alt, 0.0, 0.0)];
        for (step, share) in steps.iter_mut().zip([1.0 - alpha_f, alpha_f]) {
            let g = step.0;
            let w = compute_w(uniform, hindsight_law(g, &self.next), alpha_f)?;
            step.1 = (lr * share * n_goals * w).min(1.0);
            step.2 = (1.0 - 1.0 / t) * self.next[g.0];
        }
        let key = self.key(tr.s, tr.a, tr.g_p, tr.t_remaining);
        let row = self.row_mut(key);
        for (g, step, target) in steps {
            row[g.0] += step * (target - row[g.0]);
        }
        row[achieved.0] += lr / t;
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = v.max(0.0);
            total += *v;
        }
        if total > 0.0 {
            for v in row.iter_mut() {
                *v /= total;
            }
        } else {
            row[achieved.0] = 1.0;
        }
        self.after_update(key);
        Ok(())
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr <= 1.0 {
        Ok(())
    } else {
        Err(Error::contract(format!("learning rate {lr} outside (0, 1]")))
    }
}

/// Importance weight `f_here / (α·f_here + (1-α)·f_next)`; 1 when both
/// densities vanish.
pub fn compute_w(f_here: f64, f_next: f64, alpha: f64) -> Result<f64> {
    if f_here < 0.0 || f_next < 0.0 {
        return Err(Error::contract(format!(
            "negative density ({f_here}, {f_next})"
        )));
    }
    let den = alpha * f_here + (1.0 - alpha) * f_next;
    if den == 0.0 {
        return Ok(if f_here == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(f_here / den)
}

/// Binary dump layout, all integers little-endian:
///
/// ```text
/// "FTAB" u32:version u64:num_states u64:num_actions u64:num_goals u64:horizon u64:rows
/// rows × { u64:s u64:a u64:g_p u64:T  num_goals × f64 }
/// ```
impl FTable {
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        let rows = self.num_materialized() as u64;
        for v in [
            self.num_states as u64,
            self.num_actions as u64,
            self.num_goals as u64,
            self.horizon as u64,
            rows,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        for (k, row) in self.rows() {
            for v in [k.s.0, k.a.0, k.g_p.0, k.t] {
                out.write_all(&(v as u64).to_le_bytes())?;
            }
            for x in row {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_dump(input: &mut impl Read) -> Result<Self> {
        let bad = |m: &str| Error::contract(format!("bad density dump: {m}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != DUMP_MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(word) != DUMP_VERSION {
            return Err(bad("unsupported version"));
        }
        let read_u64 = |input: &mut dyn Read| -> Result<u64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b).map_err(|_| bad("truncated"))?;
            Ok(u64::from_le_bytes(b))
        };
        let mut header = [0u64; 5];
        for h in &mut header {
            *h = read_u64(input)?;
        }
        let [ns, na, ng, horizon, rows] = header.map(|v| v as usize);
        if ns == 0 || na == 0 || ng == 0 || horizon == 0 {
            return Err(bad("empty shape"));
        }
        let mut table = FTable::new(ns, na, ng, horizon);
        let mut row = vec![0.0; ng];
        for _ in 0..rows {
            let mut k = [0usize; 4];
            for v in &mut k {
                *v = read_u64(input)? as usize;
            }
            for x in &mut row {
                *x = f64::from_bits(read_u64(input)?);
            }
            let key = RowKey {
                s: StateId(k[0]),
                a: ActionId(k[1]),
                g_p: GoalId(k[2]),
                t: k[3],
            };
            table.set_row(key, &row)?;
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_dump(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_dump(&mut std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_risky_gridworld, parse_grid_map};
    use crate::policy::ConstantPolicy;
    use proptest::prelude::*;

    const RIGHT: ActionId = ActionId(3);

    fn chain(text: &str, horizon: usize) -> MultiGoalMdp {
        build_risky_gridworld(&parse_grid_map(text).unwrap(), horizon, 0.9).unwrap()
    }

    fn tr(s: usize, s_next: usize, t: usize) -> Transition {
        Transition {
            s: StateId(s),
            a: RIGHT,
            s_next: StateId(s_next),
            g_p: GoalId(0),
            t_remaining: t,
            episode_id: 0,
            step_index: 0,
        }
    }

    #[test]
    fn unseen_rows_are_uniform() {
        let f = FTable::new(20, 5, 16, 4);
        let v = f.query(StateId(3), ActionId(1), GoalId(2), 2, GoalId(9)).unwrap();
        assert_eq!(v, 0.0625);
        assert!(f.query(StateId(3), ActionId(1), GoalId(2), 0, GoalId(9)).is_err());
    }

    #[test]
    fn lr_one_base_case_is_point_mass() {
        let mdp = chain("S..G", 3);
        let mut f = FTable::for_mdp(&mdp);
        f.update_dense(&mdp, &tr(0, 1, 1), &ConstantPolicy(RIGHT), 1.0).unwrap();
        assert_eq!(f.live_row(StateId(0), RIGHT, GoalId(0), 1), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn lr_one_two_step_mixes_halves() {
        let mdp = chain("S..G", 3);
        let mut f = FTable::for_mdp(&mdp);
        let pi = ConstantPolicy(RIGHT);
        f.update_dense(&mdp, &tr(1, 2, 1), &pi, 1.0).unwrap();
        f.update_dense(&mdp, &tr(0, 1, 2), &pi, 1.0).unwrap();
        assert_eq!(f.live_row(StateId(0), RIGHT, GoalId(0), 2), &[0.0, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn bad_learning_rates_rejected() {
        let mdp = chain("S.G", 2);
        let mut f = FTable::for_mdp(&mdp);
        let pi = ConstantPolicy(RIGHT);
        assert!(f.update_dense(&mdp, &tr(0, 1, 1), &pi, 0.0).is_err());
        assert!(f.update_dense(&mdp, &tr(0, 1, 1), &pi, 1.5).is_err());
    }

    #[test]
    fn zero_lr_sampled_is_a_no_op() {
        let mdp = chain("S.G", 2);
        let mut f = FTable::for_mdp(&mdp);
        let before = f.clone();
        let p = SampledUpdate {
            g_r: GoalId(1),
            g_r_alt: GoalId(2),
            lr: 0.0,
            alpha_f: 0.5,
            keep_prob: 1.0 / 9.0,
        };
        f.update_sampled(&mdp, &tr(0, 1, 2), &ConstantPolicy(RIGHT), &p).unwrap();
        assert_eq!(f, before);
    }

    #[test]
    fn target_lags_until_snapshot() {
        let mdp = chain("S.G", 2);
        let pi = ConstantPolicy(RIGHT);
        let mut f = FTable::for_mdp(&mdp).with_target_interval(3);
        f.update_dense(&mdp, &tr(0, 1, 1), &pi, 1.0).unwrap();
        assert_eq!(f.row(StateId(0), RIGHT, GoalId(0), 1), &[0.25; 4]);
        f.snapshot_target();
        assert_eq!(f.row(StateId(0), RIGHT, GoalId(0), 1), &[0.0, 1.0, 0.0, 0.0]);

        let mut every = FTable::for_mdp(&mdp).with_target_interval(1);
        every.update_dense(&mdp, &tr(0, 1, 1), &pi, 1.0).unwrap();
        assert_eq!(
            every.row(StateId(0), RIGHT, GoalId(0), 1),
            every.live_row(StateId(0), RIGHT, GoalId(0), 1)
        );
    }

    #[test]
    fn dump_round_trips() {
        let mdp = chain("S!.G", 4);
        let pi = ConstantPolicy(RIGHT);
        let mut f = FTable::for_mdp(&mdp);
        f.update_dense(&mdp, &tr(0, 1, 2), &pi, 0.3).unwrap();
        f.update_dense(&mdp, &tr(1, 4, 1), &pi, 0.7).unwrap();
        let mut bytes = Vec::new();
        f.write_dump(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"FTAB");
        let g = FTable::read_dump(&mut bytes.as_slice()).unwrap();
        assert_eq!(f, g);
        assert!(FTable::read_dump(&mut &bytes[..20]).is_err());
    }

    #[test]
    fn compute_w_cases() {
        assert_eq!(compute_w(0.3, 0.9, 1.0).unwrap(), 1.0);
        assert!((compute_w(0.5, 0.25, 0.2).unwrap() - 0.5 / 0.3).abs() < 1e-12);
        assert_eq!(compute_w(0.0, 0.4, 0.5).unwrap(), 0.0);
        assert_eq!(compute_w(0.0, 0.0, 0.5).unwrap(), 1.0);
        assert!(compute_w(-0.1, 0.4, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn updates_keep_rows_normalized(
            steps in prop::collection::vec((0usize..4, 1usize..=4, 0.01f64..=1.0, 0usize..6, 0usize..6, any::<bool>()), 1..60),
        ) {
            let mdp = chain("S!.G", 4);
            let pi = ConstantPolicy(RIGHT);
            let mut f = FTable::for_mdp(&mdp);
            let mut rng = crate::rng::Rng::new(5);
            for (s, t, lr, g1, g2, sampled) in steps {
                let s_next = mdp.sample_step(StateId(s), RIGHT, &mut rng).unwrap();
                let transition = tr(s, s_next.0, t);
                if sampled {
                    let p = SampledUpdate {
                        g_r: GoalId(g1 % 5),
                        g_r_alt: GoalId(g2 % 5),
                        lr: lr * 0.5,
                        alpha_f: 0.5,
                        keep_prob: 1.0 / 9.0,
                    };
                    f.update_sampled(&mdp, &transition, &pi, &p).unwrap();
                } else {
                    f.update_dense(&mdp, &transition, &pi, lr).unwrap();
                }
                for (_, row) in f.rows() {
                    prop_assert!(row.iter().all(|&v| v >= 0.0));
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}
