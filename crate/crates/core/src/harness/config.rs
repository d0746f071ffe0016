//! Experiment configuration files.
//!
//! A config is a TOML document with four sections:
//!
//! ```toml
//! [env]
//! kind = "gridworld"        # gridworld | red_light | torus_freeze
//! map = "maps/risky.txt"    # optional, relative to the config file
//! horizon = 30
//! discount = 0.825
//!
//! [agent]
//! kind = "usher"            # qlearning | her | usher
//! k = 8                     # any LearnerConfig field
//!
//! [train]
//! episodes = 1000
//! seed = 0
//!
//! [output]
//! directory = "runs"
//! csv = "metrics.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{AgentKind, LearnerConfig};
use crate::env::{
    build_red_light, build_risky_gridworld, build_torus_freeze, default_risky_map, parse_grid_map,
    GridMap, RedLightConfig, TorusFreezeConfig,
};
use crate::error::{Error, Result};
use crate::mdp::MultiGoalMdp;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Gridworld,
    RedLight,
    TorusFreeze,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    pub horizon: usize,
    pub discount: f64,
    /// Grid map file; the bundled risky map when absent.
    #[serde(default)]
    pub map: Option<PathBuf>,
    /// Overrides the map's hazard stop probability.
    #[serde(default)]
    pub hazard_stop_prob: Option<f64>,
    #[serde(default)]
    pub red_light: RedLightConfig,
    #[serde(default)]
    pub torus: TorusFreezeConfig,
}

/// `kind` plus any [`LearnerConfig`] fields, side by side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentSection {
    pub kind: AgentKind,
    #[serde(flatten)]
    pub learner: LearnerConfig,
}

// Hand-written because `flatten` would silently accept misspelled fields.
impl<'de> Deserialize<'de> for AgentSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = serde_json::Map::deserialize(d)?;
        let kind = table
            .remove("kind")
            .ok_or_else(|| D::Error::missing_field("kind"))?;
        let kind = AgentKind::deserialize(kind).map_err(D::Error::custom)?;
        let learner = LearnerConfig::deserialize(serde_json::Value::Object(table))
            .map_err(D::Error::custom)?;
        Ok(Self { kind, learner })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub episodes: u64,
    pub seed: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Fill the `wallclock_ms` column; off by default so that reruns
    /// produce identical files.
    pub record_wallclock: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            episodes: 1000,
            seed: 0,
            eval_interval: 10,
            eval_episodes: 200,
            record_wallclock: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub csv: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("runs"),
            csv: "metrics.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSection,
    pub agent: AgentSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks ranges and that the environment can be built.
    pub fn validate(&self) -> Result<()> {
        let env = &self.env;
        if env.horizon == 0 {
            return Err(Error::Config("env.horizon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&env.discount) {
            return Err(Error::Config(format!("env.discount = {} outside [0, 1]", env.discount)));
        }
        if let Some(p) = env.hazard_stop_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("env.hazard_stop_prob = {p} outside [0, 1]")));
            }
        }
        if env.map.is_some() && env.kind != EnvKind::Gridworld {
            return Err(Error::Config("env.map only applies to gridworld".into()));
        }
        self.agent.learner.validate()?;
        if self.train.eval_interval == 0 {
            return Err(Error::Config("train.eval_interval must be positive".into()));
        }
        if self.train.eval_episodes == 0 {
            return Err(Error::Config("train.eval_episodes must be positive".into()));
        }
        if self.output.csv.is_empty() {
            return Err(Error::Config("output.csv must be a file name".into()));
        }
        self.build_env()
            .map_err(|e| Error::Config(format!("environment: {e}")))?;
        Ok(())
    }

    pub fn map_path(&self) -> Option<PathBuf> {
        self.env.map.as_ref().map(|p| self.base_dir.join(p))
    }

    /// The grid map in use, for gridworld configs.
    pub fn grid_map(&self) -> Result<Option<GridMap>> {
        if self.env.kind != EnvKind::Gridworld {
            return Ok(None);
        }
        let mut map = match self.map_path() {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                parse_grid_map(&text)?
            }
            None => default_risky_map(),
        };
        if let Some(p) = self.env.hazard_stop_prob {
            map.hazard_stop_prob = p;
        }
        Ok(Some(map))
    }

    pub fn build_env(&self) -> Result<MultiGoalMdp> {
        let (h, d) = (self.env.horizon, self.env.discount);
        match self.env.kind {
            EnvKind::Gridworld => {
                let map = self.grid_map()?.expect("gridworld has a map");
                build_risky_gridworld(&map, h, d)
            }
            EnvKind::RedLight => build_red_light(&self.env.red_light, h, d),
            EnvKind::TorusFreeze => build_torus_freeze(&self.env.torus, h, d),
        }
    }

    /// SHA-256 of the canonical JSON of everything that affects results
    /// apart from the seed. Map files are hashed by content.
    pub fn config_hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            env: &'a EnvSection,
            map_text: Option<String>,
            agent: &'a AgentSection,
            episodes: u64,
            eval_interval: u64,
            eval_episodes: usize,
        }
        let mut env = self.env.clone();
        env.map = None;
        let canonical = Canonical {
            env: &env,
            map_text: self.grid_map()?.map(|m| format!("{}@{}", m.to_text(), m.hazard_stop_prob)),
            agent: &self.agent,
            episodes: self.train.episodes,
            eval_interval: self.train.eval_interval,
            eval_episodes: self.train.eval_episodes,
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.base_dir.join(&self.output.directory).join(&self.output.csv)
    }
}
