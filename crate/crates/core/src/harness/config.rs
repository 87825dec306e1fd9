use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentConfig;
use crate::baselines::{BaselineKind, ControllerConfig};
use crate::multitask::{CoefMode, MultiTaskConfig};
use crate::scenario::RouteWeighting;
use crate::{Error, Result};

/// Every controller the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    FixedTime,
    Sotl,
    MaxPressure,
    Base,
    BaseRaw,
    BaseShr,
    BaseSpe,
    Mtlight,
}

impl ControllerKind {
    pub const ABLATION: [ControllerKind; 5] = [
        ControllerKind::Base,
        ControllerKind::BaseRaw,
        ControllerKind::BaseShr,
        ControllerKind::BaseSpe,
        ControllerKind::Mtlight,
    ];

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            ControllerKind::FixedTime => Some(BaselineKind::FixedTime),
            ControllerKind::Sotl => Some(BaselineKind::Sotl),
            ControllerKind::MaxPressure => Some(BaselineKind::MaxPressure),
            _ => None,
        }
    }

    pub fn is_learned(self) -> bool {
        self.baseline().is_none()
    }

    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::FixedTime => "fixed_time",
            ControllerKind::Sotl => "sotl",
            ControllerKind::MaxPressure => "max_pressure",
            ControllerKind::Base => "base",
            ControllerKind::BaseRaw => "base_raw",
            ControllerKind::BaseShr => "base_shr",
            ControllerKind::BaseSpe => "base_spe",
            ControllerKind::Mtlight => "mtlight",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown controller '{s}'")))
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowKind {
    SyntheticPeak,
    Constant { rate: f64 },
}

fn default_horizon() -> u64 {
    3600
}

fn default_length() -> f64 {
    300.0
}

fn default_capacity() -> usize {
    40
}

fn default_weighting() -> RouteWeighting {
    RouteWeighting::Uniform
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Grid {
        rows: usize,
        cols: usize,
        flow: FlowKind,
        #[serde(default = "default_weighting")]
        weighting: RouteWeighting,
        #[serde(default = "default_length")]
        lane_length: f64,
        #[serde(default = "default_capacity")]
        lane_capacity: usize,
        #[serde(default = "default_horizon")]
        horizon: u64,
    },
    Files {
        roadnet: PathBuf,
        flow: PathBuf,
    },
}

impl ScenarioConfig {
    pub fn grid(rows: usize, cols: usize, flow: FlowKind) -> Self {
        ScenarioConfig::Grid {
            rows,
            cols,
            flow,
            weighting: RouteWeighting::Uniform,
            lane_length: default_length(),
            lane_capacity: default_capacity(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub agent: AgentConfig,
    pub multitask: MultiTaskConfig,
    /// Seconds between decisions.
    pub action_interval: u64,
    /// Policy training period in decision epochs.
    pub t_p: usize,
    /// Multitask training period in decision epochs.
    pub t_m: usize,
    pub coef_shr: f64,
    pub coef_spe: f64,
    pub coef_mode: CoefMode,
    /// Overrides whether the multitask network runs; by default it runs for
    /// the variants that consume a latent.
    pub multitask_enabled: Option<bool>,
    /// One policy shared by all intersections.
    pub share_policy: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            agent: AgentConfig::default(),
            multitask: MultiTaskConfig::default(),
            action_interval: 5,
            t_p: 20,
            t_m: 20,
            coef_shr: 10.0,
            coef_spe: 10.0,
            coef_mode: CoefMode::ObservationScale,
            multitask_enabled: None,
            share_policy: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.multitask.validate()?;
        if self.action_interval == 0 || self.t_p == 0 || self.t_m == 0 {
            return Err(Error::Config("action_interval, t_p and t_m must be positive".into()));
        }
        if !(self.coef_shr.is_finite() && self.coef_spe.is_finite()) {
            return Err(Error::Config("latent coefficients must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub fixed_phase_duration: u64,
    pub sotl_threshold: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            fixed_phase_duration: 30,
            sotl_threshold: 5,
        }
    }
}

impl BaselineParams {
    pub fn controller_config(&self, kind: BaselineKind) -> ControllerConfig {
        ControllerConfig {
            kind,
            fixed_phase_duration: self.fixed_phase_duration,
            sotl_threshold: self.sotl_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub controller: ControllerKind,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub baseline: BaselineParams,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_episodes() -> usize {
    50
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig, controller: ControllerKind) -> Self {
        ExperimentConfig {
            scenario,
            controller,
            train: TrainConfig::default(),
            baseline: BaselineParams::default(),
            episodes: default_episodes(),
            seeds: default_seeds(),
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let ScenarioConfig::Files { roadnet, flow } = &self.scenario {
            for p in [roadnet, flow] {
                if !p.exists() {
                    return Err(Error::Config(format!("scenario file {} does not exist", p.display())));
                }
            }
        }
        if let Some(kind) = self.controller.baseline() {
            self.baseline.controller_config(kind).validate()?;
        }
        self.train.validate()
    }

    /// SHA-256 of the canonical JSON encoding, excluding the output
    /// directory.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_names_round_trip() {
        for k in [
            ControllerKind::FixedTime,
            ControllerKind::Sotl,
            ControllerKind::MaxPressure,
            ControllerKind::Base,
            ControllerKind::BaseRaw,
            ControllerKind::BaseShr,
            ControllerKind::BaseSpe,
            ControllerKind::Mtlight,
        ] {
            assert_eq!(ControllerKind::parse(k.label()).unwrap(), k);
        }
        assert!(ControllerKind::parse("dqn").is_err());
    }

    #[test]
    fn hash_is_stable_and_ignores_output_dir() {
        let mut a = ExperimentConfig::new(ScenarioConfig::grid(2, 2, FlowKind::SyntheticPeak), ControllerKind::Mtlight);
        let h = a.config_hash();
        assert_eq!(h.len(), 64);
        a.output_dir = Some("/tmp/x".into());
        assert_eq!(a.config_hash(), h);
        a.episodes = 3;
        assert_ne!(a.config_hash(), h);
    }

    #[test]
    fn json_defaults_fill_in() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"scenario": {"kind": "grid", "rows": 1, "cols": 1, "flow": {"kind": "constant", "rate": 0.5}},
                "controller": "base_shr"}"#,
        )
        .unwrap();
        assert_eq!(c.episodes, 50);
        assert_eq!(c.train.t_p, 20);
        assert_eq!(c.train.agent.gamma, 0.95);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::new(ScenarioConfig::grid(1, 1, FlowKind::SyntheticPeak), ControllerKind::Base);
        c.episodes = 0;
        assert!(c.validate().is_err());
        c.episodes = 1;
        c.seeds.clear();
        assert!(c.validate().is_err());
        c.seeds = vec![1];
        c.train.agent.gamma = 1.0;
        assert!(c.validate().is_err());
    }
}
