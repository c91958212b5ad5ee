//! Session configuration, read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use skilldrive_core::agents::{AgentParams, SkillPreset};
use skilldrive_core::guidance::{GuidanceGains, GuidanceMethod};
use skilldrive_core::haptics::HapticParams;
use skilldrive_core::plant::{DeviceParams, VehicleParams};
use skilldrive_core::track::{build_training_path, generate_random_path, TrackPath};

use crate::HarnessError;

/// Default trial length cap, s.
pub const DEFAULT_DURATION_CAP: f64 = 360.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PathSpec {
    /// Three-segment data-collection path with the given sweep.
    Training { phi_deg: f64 },
    /// Random path from the generator.
    Random { seed: u64, length: f64 },
    /// Path in the text format written by `generate-track`.
    File { file: PathBuf },
}

impl PathSpec {
    pub fn build(&self) -> Result<TrackPath, HarnessError> {
        Ok(match self {
            PathSpec::Training { phi_deg } => build_training_path(phi_deg.to_radians())?,
            PathSpec::Random { seed, length } => generate_random_path(*seed, *length)?,
            PathSpec::File { file } => TrackPath::from_text(&std::fs::read_to_string(file)?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriverSpec {
    Agent {
        preset: SkillPreset,
        /// Roster member; `None` uses the preset itself.
        #[serde(default)]
        index: Option<usize>,
        /// Full parameter override.
        #[serde(default)]
        params: Option<AgentParams>,
        /// Keep the hands off the wheel (pedals still driven).
        #[serde(default)]
        hands_off: bool,
        #[serde(default)]
        noiseless: bool,
    },
    /// Input arrives from outside (the live-drive service).
    External,
}

impl DriverSpec {
    pub fn agent(preset: SkillPreset) -> Self {
        DriverSpec::Agent { preset, index: None, params: None, hands_off: false, noiseless: false }
    }

    /// Effective agent parameters, if this is an agent.
    pub fn agent_params(&self) -> Option<AgentParams> {
        match self {
            DriverSpec::Agent { preset, index, params, noiseless, .. } => {
                let p = params.clone().unwrap_or_else(|| match index {
                    Some(i) => preset.individual(*i),
                    None => preset.params(),
                });
                Some(if *noiseless { p.noiseless() } else { p })
            }
            DriverSpec::External => None,
        }
    }
}

/// First-order autoregressive perturbation: stationary standard deviation
/// and correlation time (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub sigma: f64,
    pub time: f64,
}

impl Perturbation {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.sigma.is_finite() && self.sigma >= 0.0 && self.time.is_finite() && self.time > 0.0 {
            Ok(())
        } else {
            Err(HarnessError::ConfigInvalid("perturbations need sigma >= 0 and time > 0".into()))
        }
    }
}

/// Perturbations applied during corpus collection so the expert is seen
/// recovering from states it would otherwise never reach.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Perturbations {
    /// Lateral drift of the car, m/s, left positive.
    pub crosswind: Option<Perturbation>,
    /// Torque on the wheel, N*m.
    pub wheel_torque: Option<Perturbation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub path: PathSpec,
    pub method: GuidanceMethod,
    pub driver: DriverSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub duration_cap: f64,
    /// Where `collect` and the CLI write logs.
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
    #[serde(default)]
    pub perturbations: Perturbations,
    #[serde(default)]
    pub gains: GuidanceGains,
    #[serde(default)]
    pub haptic: HapticParams,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub device: DeviceParams,
}

fn default_cap() -> f64 {
    DEFAULT_DURATION_CAP
}

impl SessionConfig {
    pub fn new(path: PathSpec, method: GuidanceMethod, driver: DriverSpec, seed: u64) -> Self {
        Self {
            path,
            method,
            driver,
            seed,
            duration_cap: DEFAULT_DURATION_CAP,
            log_dir: None,
            perturbations: Perturbations::default(),
            gains: GuidanceGains::default(),
            haptic: HapticParams::default(),
            vehicle: VehicleParams::default(),
            device: DeviceParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.duration_cap.is_finite() && self.duration_cap > 0.0) {
            return Err(HarnessError::ConfigInvalid(format!("duration cap {} must be positive", self.duration_cap)));
        }
        for p in [self.perturbations.crosswind, self.perturbations.wheel_torque].iter().flatten() {
            p.validate()?;
        }
        if let Some(p) = self.driver.agent_params() {
            p.validate().map_err(HarnessError::ConfigInvalid)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
