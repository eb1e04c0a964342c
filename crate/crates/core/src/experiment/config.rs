use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controllers::{BaselineKind, ControlMode, LearnerConfig, Objective};
use crate::env::{NetworkConfig, PopularityConfig};
use crate::error::{Error, Result};
use crate::hddpg::NetShape;
use crate::nn::Activation;

/// What a run drives: a learner in one of the control modes, or a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RunMode {
    Learner(ControlMode, Objective),
    Baseline(BaselineKind),
}

impl RunMode {
    pub const NAMES: &'static [&'static str] = &[
        "centralized",
        "partially-decentralized",
        "fully-decentralized",
        "plain-ddpg",
        "pd-ddpg",
        "fd-ddpg",
        "co-cu",
        "lo-cu",
        "rcu",
    ];

    pub fn as_str(self) -> &'static str {
        use ControlMode::*;
        match self {
            RunMode::Learner(Centralized, Objective::Homotopy) => "centralized",
            RunMode::Learner(PartiallyDecentralized, Objective::Homotopy) => {
                "partially-decentralized"
            }
            RunMode::Learner(FullyDecentralized, Objective::Homotopy) => "fully-decentralized",
            RunMode::Learner(Centralized, Objective::Plain) => "plain-ddpg",
            RunMode::Learner(PartiallyDecentralized, Objective::Plain) => "pd-ddpg",
            RunMode::Learner(FullyDecentralized, Objective::Plain) => "fd-ddpg",
            RunMode::Baseline(kind) => kind.as_str(),
        }
    }

    pub fn is_learner(self) -> bool {
        matches!(self, RunMode::Learner(..))
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use ControlMode::*;
        let mode = match s.to_ascii_lowercase().as_str() {
            "centralized" | "c-hddpg" => RunMode::Learner(Centralized, Objective::Homotopy),
            "partially-decentralized" | "pd-hddpg" => {
                RunMode::Learner(PartiallyDecentralized, Objective::Homotopy)
            }
            "fully-decentralized" | "fd-hddpg" => {
                RunMode::Learner(FullyDecentralized, Objective::Homotopy)
            }
            "plain-ddpg" | "c-ddpg" => RunMode::Learner(Centralized, Objective::Plain),
            "pd-ddpg" => RunMode::Learner(PartiallyDecentralized, Objective::Plain),
            "fd-ddpg" => RunMode::Learner(FullyDecentralized, Objective::Plain),
            "co-cu" => RunMode::Baseline(BaselineKind::CoCu),
            "lo-cu" => RunMode::Baseline(BaselineKind::LoCu),
            "rcu" => RunMode::Baseline(BaselineKind::Rcu),
            _ => {
                return Err(Error::invalid(
                    "mode",
                    format!("unknown mode `{s}`, expected one of {}", Self::NAMES.join(", ")),
                ))
            }
        };
        Ok(mode)
    }
}

impl TryFrom<String> for RunMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RunMode> for String {
    fn from(m: RunMode) -> Self {
        m.as_str().to_owned()
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Network parameters as written in a config file. Storage is given as a
/// fraction of the catalog so that catalog overrides keep the ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub area_side_m: f64,
    pub num_sbs: usize,
    pub comm_radius_m: f64,
    pub max_users_per_sbs: usize,
    pub ppp_density: f64,
    pub num_content: usize,
    /// Storage per SBS over catalog size, `L / F`.
    pub cache_fraction: f64,
    pub content_size: f64,
    pub sbs_spacing_m: f64,
}

impl NetworkSection {
    pub fn to_network(&self) -> NetworkConfig {
        NetworkConfig {
            area_side_m: self.area_side_m,
            num_sbs: self.num_sbs,
            comm_radius_m: self.comm_radius_m,
            max_users_per_sbs: self.max_users_per_sbs,
            ppp_density: self.ppp_density,
            num_content: self.num_content,
            cache_capacity: self.cache_fraction * self.num_content as f64,
            content_size: self.content_size,
            sbs_spacing_m: self.sbs_spacing_m,
        }
    }
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub seed: u64,
    /// Learner training epochs; baselines have nothing to train.
    pub train_epochs: u64,
    /// Greedy epochs after training.
    pub eval_epochs: u64,
    /// Moving-average window of the metrics file.
    pub window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub network: NetworkSection,
    pub popularity: PopularityConfig,
    pub learner: LearnerConfig,
}

/// Shipped starting points that a config file is merged onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    PaperDefault,
    Tiny,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::PaperDefault => "paper-default",
            Preset::Tiny => "tiny",
        }
    }

    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::PaperDefault => paper_default(),
            Preset::Tiny => tiny(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-default" => Ok(Preset::PaperDefault),
            "tiny" => Ok(Preset::Tiny),
            other => Err(Error::invalid(
                "preset",
                format!("unknown preset `{other}`, expected paper-default or tiny"),
            )),
        }
    }
}

fn paper_default() -> ExperimentConfig {
    let train_epochs = 100_000;
    ExperimentConfig {
        mode: RunMode::Learner(ControlMode::Centralized, Objective::Homotopy),
        seed: 0,
        train_epochs,
        eval_epochs: 10_000,
        window: 5000,
        output: None,
        network: NetworkSection {
            area_side_m: 1000.0,
            num_sbs: 4,
            comm_radius_m: 500.0,
            max_users_per_sbs: 100,
            ppp_density: 9.5e-5,
            num_content: 20,
            cache_fraction: 0.2,
            content_size: 1.0,
            sbs_spacing_m: 300.0,
        },
        popularity: PopularityConfig::default(),
        learner: LearnerConfig {
            shape: NetShape {
                actor_hidden: vec![256, 128, 64],
                critic_hidden: vec![512, 512, 512],
                activation: Activation::Relu,
            },
            actor_lr: 0.01,
            critic_lr: 0.001,
            lr_decay_power: 0.9,
            lr_horizon: train_epochs,
            batch_size: 100,
            buffer_capacity: 5000,
            tau: 0.001,
            gamma: 0.99,
            ou_theta: 0.15,
            ou_sigma: 0.3f64.sqrt(),
            beta_initial: 0.9,
            beta_decay: 0.995,
            beta_floor: 0.0001,
            lambda_min: -0.005,
            homotopy_steps: 10,
            homotopy_period: 1000,
            warmup: false,
        },
    }
}

fn tiny() -> ExperimentConfig {
    let base = paper_default();
    let train_epochs = 20_000;
    ExperimentConfig {
        train_epochs,
        window: 2000,
        network: NetworkSection {
            num_sbs: 2,
            max_users_per_sbs: 10,
            // About ten users over the square kilometre.
            ppp_density: 1e-5,
            num_content: 5,
            cache_fraction: 0.4,
            ..base.network
        },
        popularity: PopularityConfig {
            skewness: Some(1.0),
            skew_choices: vec![1.0],
            shuffle_period: 0,
        },
        learner: LearnerConfig {
            shape: NetShape {
                actor_hidden: vec![64, 32],
                critic_hidden: vec![64, 64],
                activation: Activation::Relu,
            },
            actor_lr: 0.003,
            lr_horizon: train_epochs,
            batch_size: 32,
            buffer_capacity: 2000,
            tau: 0.01,
            // Short horizon and slow exploration decay suit the short run.
            gamma: 0.9,
            beta_decay: 0.9998,
            ..base.learner
        },
        ..base
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        paper_default()
    }
}

impl ExperimentConfig {
    /// Merges TOML `text` onto `preset`, rejecting unknown keys and
    /// out-of-range values with their key path.
    pub fn from_toml_str(text: &str, preset: Preset) -> Result<Self> {
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let toml::Value::Table(mut merged) =
            toml::Value::try_from(preset.config()).map_err(|e| Error::Config(e.to_string()))?
        else {
            unreachable!("a struct serializes to a table")
        };
        merge(&mut merged, overrides);
        let config: Self = serde_path_to_error::deserialize(toml::Value::Table(merged))
            .map_err(|e| {
                let path = e.path().to_string();
                Error::invalid(path, e.into_inner().to_string())
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn network_config(&self) -> NetworkConfig {
        self.network.to_network()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.network.cache_fraction > 0.0 && self.network.cache_fraction <= 1.0) {
            return Err(Error::invalid(
                "network.cache_fraction",
                format!("must lie in (0, 1], got {}", self.network.cache_fraction),
            ));
        }
        self.network_config().validate().map_err(|e| match e {
            Error::InvalidConfig { key, reason } => Error::invalid(format!("network.{key}"), reason),
            other => other,
        })?;
        crate::env::validate_popularity(&self.popularity)?;
        self.learner.validate()?;
        if self.window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        Ok(())
    }
}

/// Reads and validates a config file merged onto `preset`.
pub fn load_config(path: &Path, preset: Preset) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text, preset)
}

/// Tables merge key by key; any other value replaces the base.
fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
