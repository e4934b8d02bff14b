//! Scenario configuration: a TOML file with one section per module, and the
//! built-in presets it can be expanded from.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::controller::ControllerParams;
use crate::fields::FieldSpec;
use crate::simulator::SimConfig;
use crate::vehicle::VehicleState;
use crate::Vec3;

/// Sensor offset used by every preset.
pub const PRESET_SENSOR_OFFSET: f64 = 0.1;
pub const DEFAULT_T_END: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Corollary1,
    Corollary2,
    Proposition2,
    Elliptical,
    Acoustic,
    Rosenbrock,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Self::Corollary1, Self::Corollary2, Self::Proposition2, Self::Elliptical, Self::Acoustic, Self::Rosenbrock];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Corollary1 => "corollary1",
            Self::Corollary2 => "corollary2",
            Self::Proposition2 => "proposition2",
            Self::Elliptical => "elliptical",
            Self::Acoustic => "acoustic",
            Self::Rosenbrock => "rosenbrock",
        }
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| CliError::Config(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub r_c: [f64; 3],
    pub alpha: f64,
    pub theta: f64,
}

impl From<InitialConfig> for VehicleState {
    fn from(c: InitialConfig) -> Self {
        VehicleState::new(Vec3::from(c.r_c), c.alpha, c.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// Integration step; absent means 64 steps per probing period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    pub outputs: PathBuf,
    pub params: ControllerParams,
    pub field: FieldSpec,
    pub initial: InitialConfig,
}

fn default_stride() -> usize {
    1
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let (a, v_c) = match preset {
            Preset::Corollary2 => (1.5, 0.001),
            Preset::Proposition2 => (1.5, 0.1),
            _ => (2.0, 0.001),
        };
        let origin = [0.0; 3];
        let field = match preset {
            Preset::Elliptical => {
                FieldSpec::QuadraticElliptical { f_star: 1.0, diag_coeffs: [2.0, 0.5, 1.0], r_star: origin }
            }
            Preset::Acoustic => FieldSpec::Acoustic { r_star: origin },
            Preset::Rosenbrock => FieldSpec::Rosenbrock { r_star: origin },
            _ => FieldSpec::spherical(1.0, 1.0, origin),
        };
        Self {
            name: preset.name().to_string(),
            preset: Some(preset),
            dt: None,
            t_end: DEFAULT_T_END,
            record_stride: 1,
            outputs: PathBuf::from("out"),
            params: ControllerParams {
                a,
                c_alpha: 100.0,
                c_theta: 100.0,
                b: 5.0,
                h: 10.0,
                v_c,
                omega: 40.0,
                sensor_offset: PRESET_SENSOR_OFFSET,
            },
            field,
            initial: InitialConfig { r_c: [1.0, 1.0, 1.0], alpha: -FRAC_PI_2, theta: -FRAC_PI_2 },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| SimConfig::default_dt(self.params.omega))
    }

    /// Checks everything the simulator and the analysis rely on.
    pub fn validate(&self) -> Result<(), CliError> {
        self.sim_config().validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params,
            field: self.field.clone(),
            initial: self.initial.into(),
            dt: self.dt(),
            t_end: self.t_end,
            record_stride: self.record_stride,
        }
    }

    /// Curvature of a spherical field; the averaged analysis needs it.
    pub fn q_r(&self) -> Result<f64, CliError> {
        self.field
            .spherical_coeffs()
            .map(|(_, q)| q)
            .ok_or_else(|| CliError::Config("averaged analysis needs a quadratic_spherical field".into()))
    }
}
