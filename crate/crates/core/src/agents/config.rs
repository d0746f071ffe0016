use serde::{Deserialize, Serialize};

use crate::density::DensityMode;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    /// Goal-conditioned Q-learning on the pursued goal only.
    QLearning,
    /// Hindsight relabeling on a single-goal table.
    Her,
    /// Hindsight relabeling with importance weights from a learned
    /// successor density, on a two-goal table.
    Usher,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::QLearning => "qlearning",
            AgentKind::Her => "her",
            AgentKind::Usher => "usher",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qlearning" => Ok(AgentKind::QLearning),
            "her" => Ok(AgentKind::Her),
            "usher" => Ok(AgentKind::Usher),
            other => Err(Error::Config(format!("unknown agent kind {other:?}"))),
        }
    }
}

/// Which policy the successor density follows when it bootstraps.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityPolicy {
    /// The greedy policy of the current action values.
    Greedy,
    /// The ε-greedy behavior policy that collects the data.
    #[default]
    Behavior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Hindsight goals per kept policy goal.
    pub k: usize,
    pub alpha_q: f64,
    pub alpha_f: f64,
    /// Weights are clipped to `[1/(1+c), 1+c]`.
    pub clip: f64,
    pub lr0: f64,
    /// `lr(n) = lr0 · (1 + n)^(-lr_decay)` over completed episodes `n`.
    pub lr_decay: f64,
    /// Density rows learn at `density_lr0 · (1 + n)^(-density_lr_decay)`
    /// where `n` counts that row's previous updates.
    pub density_lr0: f64,
    pub density_lr_decay: f64,
    pub epsilon: f64,
    /// Break ties among greedy actions uniformly at random while acting.
    pub random_ties: bool,
    pub batch_size: usize,
    pub batches_per_episode: usize,
    pub density_mode: DensityMode,
    pub density_policy: DensityPolicy,
    /// Refresh the density target every this many updates; 0 disables it.
    pub target_interval: usize,
    /// Count HER's kept policy-goal branch in the densities behind the
    /// action-value weights.
    pub keep_mass_in_weights: bool,
    pub t_conditioned: bool,
    /// Q-learning updates once per environment step instead of from replay.
    pub online: bool,
    /// Replay capacity in episodes; unbounded when unset.
    pub buffer_capacity: Option<usize>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            k: 8,
            alpha_q: 0.01,
            alpha_f: 0.5,
            clip: 0.3,
            lr0: 0.01,
            lr_decay: 0.75,
            density_lr0: 1.0,
            density_lr_decay: 0.6,
            epsilon: 0.2,
            random_ties: true,
            batch_size: 64,
            batches_per_episode: 1,
            density_mode: DensityMode::Dense,
            density_policy: DensityPolicy::Behavior,
            target_interval: 0,
            keep_mass_in_weights: true,
            t_conditioned: false,
            online: false,
            buffer_capacity: None,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in (0, 1]")))
            }
        };
        unit("alpha_q", self.alpha_q)?;
        unit("alpha_f", self.alpha_f)?;
        unit("lr0", self.lr0)?;
        unit("density_lr0", self.density_lr0)?;
        if self.clip.is_nan() || self.clip <= 0.0 {
            return Err(Error::Config(format!("clip = {} must be positive", self.clip)));
        }
        for (name, v) in [("lr_decay", self.lr_decay), ("density_lr_decay", self.density_lr_decay)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon = {} outside [0, 1]", self.epsilon)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::Config("buffer_capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn keep_prob(&self) -> f64 {
        1.0 / (self.k as f64 + 1.0)
    }

    /// Action-value learning rate after `episodes` completed episodes.
    pub fn lr(&self, episodes: u64) -> f64 {
        self.lr0 * (1.0 + episodes as f64).powf(-self.lr_decay)
    }

    /// Density learning rate for a row updated `visits` times before.
    pub fn density_lr(&self, visits: u32) -> f64 {
        self.density_lr0 * (1.0 + visits as f64).powf(-self.density_lr_decay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        LearnerConfig::default().validate().unwrap();
    }

    #[test]
    fn ranges_checked() {
        for bad in [
            LearnerConfig { alpha_q: 0.0, ..Default::default() },
            LearnerConfig { alpha_f: 1.5, ..Default::default() },
            LearnerConfig { clip: 0.0, ..Default::default() },
            LearnerConfig { epsilon: -0.1, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn schedule_decays() {
        let c = LearnerConfig::default();
        assert_eq!(c.lr(0), 0.01);
        assert!((c.lr(15) - 0.01 * 16f64.powf(-0.75)).abs() < 1e-15);
    }
}
