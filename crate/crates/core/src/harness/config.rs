//! Scenario, agent, scoring and output settings, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::{DEFAULT_GOOD_THRESHOLD, MAX_HISTORY};
use crate::perception::SensorRig;
use crate::road::RoadSpec;
use crate::scoring::ScoringParams;
use crate::traffic::{ControlParams, IdmParams, TrafficSpec, DEFAULT_DT};
use crate::weather::{preset, Preset, WeatherConfig, WeatherError, WeatherModel};

/// A preset name or an explicit eight-field weather table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeatherSpec {
    Preset(String),
    Custom(WeatherConfig),
}

impl WeatherSpec {
    /// Label and parameter vector. Explicit tables are labelled `custom`.
    pub fn resolve(&self) -> Result<(String, WeatherConfig), WeatherError> {
        match self {
            WeatherSpec::Preset(name) => Ok((name.clone(), preset(name)?)),
            WeatherSpec::Custom(cfg) => {
                cfg.validate()?;
                Ok(("custom".to_string(), *cfg))
            }
        }
    }
}

impl Default for WeatherSpec {
    fn default() -> Self {
        WeatherSpec::Preset(Preset::Good.name().to_string())
    }
}

mod rig_name {
    use super::SensorRig;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rig: &SensorRig, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(rig)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SensorRig, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub weather: WeatherSpec,
    /// `3cam`, `6cam`, `3cam+lidar` or `6cam+lidar`.
    #[serde(with = "rig_name")]
    pub rig: SensorRig,
    pub max_ticks: u64,
    /// Ticks between agent queries.
    pub decision_period: u32,
    /// Seconds per tick.
    pub dt: f64,
    pub ego_lane: usize,
    pub ego_start_s: f64,
    pub ego_start_speed: f64,
    /// Arc position of the route goal, metres.
    pub goal_s: f64,
    /// NPCs within this longitudinal distance count as surrounding traffic.
    pub sparse_radius: f64,
    pub road: RoadSpec,
    pub traffic: TrafficSpec,
    pub idm: IdmParams,
    pub weather_model: WeatherModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            weather: WeatherSpec::default(),
            rig: SensorRig::default(),
            max_ticks: 1200,
            decision_period: 10,
            dt: DEFAULT_DT,
            ego_lane: 1,
            ego_start_s: 20.0,
            ego_start_speed: 8.0,
            goal_s: 300.0,
            sparse_radius: 100.0,
            road: RoadSpec::default(),
            traffic: TrafficSpec::default(),
            idm: IdmParams::default(),
            weather_model: WeatherModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// `builtin:baseline`, `builtin:cautious`, `builtin:aggressive`,
    /// `proc:<command>` or `tcp:<host:port>`.
    pub target: String,
    pub timeout_ms: u64,
    /// Reconnect attempts per request after a transport failure.
    pub retries: u32,
    /// History entries sent with each request, at most 8.
    pub history_len: usize,
    /// Decisions whose window score reaches this are stored without
    /// reflection.
    pub memory_threshold: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            target: "builtin:baseline".to_string(),
            timeout_ms: 5000,
            retries: 1,
            history_len: MAX_HISTORY,
            memory_threshold: DEFAULT_GOOD_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// tracing filter used by the command-line front end.
    pub log_level: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            log_level: "info".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub agent: AgentConfig,
    pub scoring: ScoringParams,
    pub control: ControlParams,
    pub output: OutputConfig,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let sc = &self.scenario;
        sc.weather.resolve()?;
        let road = crate::road::build_road(&sc.road)?;
        if sc.decision_period == 0 {
            return Err(invalid("decision_period must be at least 1"));
        }
        if !(sc.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        if sc.ego_lane >= road.lane_count() {
            return Err(invalid(format!(
                "ego_lane {} outside a {}-lane road",
                sc.ego_lane,
                road.lane_count()
            )));
        }
        if !(sc.goal_s > sc.ego_start_s && sc.goal_s <= road.total_length()) {
            return Err(invalid(format!(
                "goal_s must lie between the ego start and the road end ({} m)",
                road.total_length()
            )));
        }
        if !(sc.ego_start_s >= 0.0) || !(sc.ego_start_speed >= 0.0) {
            return Err(invalid("ego start position and speed must be non-negative"));
        }
        if !(sc.sparse_radius > 0.0) {
            return Err(invalid("sparse_radius must be positive"));
        }
        if self.agent.history_len > MAX_HISTORY {
            return Err(invalid(format!("history_len is capped at {MAX_HISTORY}")));
        }
        if !(0.0..=1.0).contains(&self.agent.memory_threshold) {
            return Err(invalid("memory_threshold must be in [0, 1]"));
        }
        if self.agent.timeout_ms == 0 {
            return Err(invalid("timeout_ms must be positive"));
        }
        super::run::parse_target(&self.agent.target)?;
        self.scoring.validate()?;
        if !(self.control.lane_change_duration > 0.0) {
            return Err(invalid("lane_change_duration must be positive"));
        }
        Ok(())
    }

    /// Control parameters with the acceleration pulse resolved: unless set,
    /// an accelerate or decelerate command lasts one decision period.
    pub fn effective_control(&self) -> ControlParams {
        ControlParams {
            accel_pulse_ticks: self
                .control
                .accel_pulse_ticks
                .or(Some(self.scenario.decision_period)),
            ..self.control
        }
    }
}

/// Cross product of presets, rigs and seeds over a shared base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSpec {
    pub presets: Vec<String>,
    pub rigs: Vec<String>,
    pub seeds: Vec<u64>,
    pub base: RunConfig,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            presets: Preset::ALL.iter().map(|p| p.name().to_string()).collect(),
            rigs: SensorRig::ABLATION.iter().map(|r| r.to_string()).collect(),
            seeds: vec![1],
            base: RunConfig::default(),
        }
    }
}

impl BatchSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let spec: BatchSpec = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.presets.is_empty() || self.rigs.is_empty() || self.seeds.is_empty() {
            return Err(invalid("batch needs at least one preset, one rig and one seed"));
        }
        for p in &self.presets {
            preset(p)?;
        }
        for r in &self.rigs {
            r.parse::<SensorRig>().map_err(|e| invalid(e.to_string()))?;
        }
        self.base.validate()
    }
}
