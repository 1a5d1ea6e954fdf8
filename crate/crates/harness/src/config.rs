//! TOML-facing parameter files.
//!
//! Core types stay serde-free; these mirrors own the file format.
//! Angles in files are degrees (field names say so) and are converted
//! to radians on load. Every field has a default, so an empty file
//! yields the reference platform and stock gains.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tilthex_core::controller::{Controller, ControllerGains, SaturationModel, TikhonovParams};
use tilthex_core::drivetrain::{DrivetrainError, DrivetrainParams};
use tilthex_core::vehicle::{ModelError, VehicleParams};
use tilthex_core::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Drivetrain(#[from] DrivetrainError),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub arm_length: f64,
    pub thrust_coeff: f64,
    pub drag_torque_coeff: f64,
    pub gravity: f64,
    pub spin_min: f64,
    pub spin_max: f64,
    pub tilt_max_deg: f64,
    pub tilt_rate_deg: f64,
    pub max_thrust: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self::from(&VehicleParams::default())
    }
}

impl From<&VehicleParams> for VehicleConfig {
    fn from(p: &VehicleParams) -> Self {
        Self {
            mass: p.mass,
            inertia: [p.inertia_diag.x, p.inertia_diag.y, p.inertia_diag.z],
            arm_length: p.arm_length,
            thrust_coeff: p.thrust_coeff,
            drag_torque_coeff: p.drag_torque_coeff,
            gravity: p.gravity,
            spin_min: p.spin_min,
            spin_max: p.spin_max,
            tilt_max_deg: p.tilt_max.to_degrees(),
            tilt_rate_deg: p.tilt_rate_limit.to_degrees(),
            max_thrust: p.max_thrust,
        }
    }
}

impl TryFrom<&VehicleConfig> for VehicleParams {
    type Error = ConfigError;

    fn try_from(c: &VehicleConfig) -> Result<Self, ConfigError> {
        let params = VehicleParams {
            mass: c.mass,
            inertia_diag: Vec3::new(c.inertia[0], c.inertia[1], c.inertia[2]),
            arm_length: c.arm_length,
            thrust_coeff: c.thrust_coeff,
            drag_torque_coeff: c.drag_torque_coeff,
            gravity: c.gravity,
            spin_min: c.spin_min,
            spin_max: c.spin_max,
            tilt_min: 0.0,
            tilt_max: c.tilt_max_deg.to_radians(),
            tilt_rate_limit: c.tilt_rate_deg.to_radians(),
            max_thrust: c.max_thrust,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrivetrainConfig {
    pub gear_ratio: f64,
    pub bend_angle_deg: f64,
}

impl Default for DrivetrainConfig {
    fn default() -> Self {
        Self::from(&DrivetrainParams::default())
    }
}

impl From<&DrivetrainParams> for DrivetrainConfig {
    fn from(p: &DrivetrainParams) -> Self {
        Self {
            gear_ratio: p.gear_ratio,
            bend_angle_deg: p.bend_angle.to_degrees(),
        }
    }
}

impl TryFrom<&DrivetrainConfig> for DrivetrainParams {
    type Error = ConfigError;

    fn try_from(c: &DrivetrainConfig) -> Result<Self, ConfigError> {
        let params = DrivetrainParams {
            gear_ratio: c.gear_ratio,
            bend_angle: c.bend_angle_deg.to_radians(),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsConfig {
    pub position: f64,
    pub position_integral: f64,
    pub velocity: f64,
    pub attitude: [f64; 3],
    pub attitude_integral: [f64; 3],
    pub angular_rate: [f64; 3],
    pub position_integral_limit: f64,
    pub attitude_integral_limit: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        Self::from(&ControllerGains::default())
    }
}

impl From<&ControllerGains> for GainsConfig {
    fn from(g: &ControllerGains) -> Self {
        let arr = |v: &Vec3| [v.x, v.y, v.z];
        Self {
            position: g.position,
            position_integral: g.position_integral,
            velocity: g.velocity,
            attitude: arr(&g.attitude),
            attitude_integral: arr(&g.attitude_integral),
            angular_rate: arr(&g.angular_rate),
            position_integral_limit: g.position_integral_limit,
            attitude_integral_limit: g.attitude_integral_limit,
        }
    }
}

impl From<&GainsConfig> for ControllerGains {
    fn from(c: &GainsConfig) -> Self {
        let vec = |a: &[f64; 3]| Vec3::new(a[0], a[1], a[2]);
        Self {
            position: c.position,
            position_integral: c.position_integral,
            velocity: c.velocity,
            attitude: vec(&c.attitude),
            attitude_integral: vec(&c.attitude_integral),
            angular_rate: vec(&c.angular_rate),
            position_integral_limit: c.position_integral_limit,
            attitude_integral_limit: c.attitude_integral_limit,
        }
    }
}

/// Allocation and saturation tuning that rides along with the gains.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub saturation_poly: [f64; 3],
    pub saturation_margin: f64,
    pub dead_zone_deg: f64,
    pub tikhonov_k1: f64,
    pub tikhonov_k2: f64,
    pub bisection_iterations: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let c = Controller::default();
        Self {
            saturation_poly: c.saturation.poly,
            saturation_margin: c.saturation.margin,
            dead_zone_deg: c.saturation.dead_zone.to_degrees(),
            tikhonov_k1: c.regularization.k1,
            tikhonov_k2: c.regularization.k2,
            bisection_iterations: c.bisection_iterations,
        }
    }
}

/// `[vehicle]` and `[drivetrain]` tables of a params file.
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub vehicle: VehicleConfig,
    pub drivetrain: DrivetrainConfig,
}

impl ParamsFile {
    pub fn build(&self) -> Result<(VehicleParams, DrivetrainParams), ConfigError> {
        Ok(((&self.vehicle).try_into()?, (&self.drivetrain).try_into()?))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        Ok(toml::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// `[gains]` and `[controller]` tables of a gains file.
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsFile {
    pub gains: GainsConfig,
    pub controller: TuningConfig,
}

impl GainsFile {
    pub fn build(&self) -> Controller {
        Controller {
            gains: (&self.gains).into(),
            saturation: SaturationModel {
                poly: self.controller.saturation_poly,
                margin: self.controller.saturation_margin,
                dead_zone: self.controller.dead_zone_deg.to_radians(),
            },
            regularization: TikhonovParams {
                k1: self.controller.tikhonov_k1,
                k2: self.controller.tikhonov_k2,
            },
            bisection_iterations: self.controller.bisection_iterations,
        }
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        Ok(toml::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }
}
