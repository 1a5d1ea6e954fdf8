//! Scenario files: everything one simulation run needs besides the
//! vehicle and controller parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tilthex_core::dynamics::Disturbance;
use tilthex_core::Vec3;

use crate::trajectory::{TrajectoryError, TrajectorySpec};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("dt must be positive and no larger than duration, got {0}")]
    BadTimeStep(f64),
    #[error("tilt schedule times must be strictly increasing")]
    UnorderedSchedule,
    #[error("disturbance window [{start}, {end}) is empty or negative")]
    BadDisturbanceWindow { start: f64, end: f64 },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// One step change of the commanded tilt angle. The servo's rate
/// limit turns the step into a ramp on its own.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TiltKnot {
    pub t: f64,
    pub tilt_deg: f64,
}

/// External wrench pulse, active on `[start, end)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub start: f64,
    pub end: f64,
    /// World-frame force, N.
    #[serde(default)]
    pub force: [f64; 3],
    /// Body-frame torque, N m.
    #[serde(default)]
    pub torque: [f64; 3],
}

impl From<&DisturbanceSpec> for Disturbance {
    fn from(spec: &DisturbanceSpec) -> Self {
        Disturbance {
            start: spec.start,
            end: spec.end,
            force_world: Vec3::from(spec.force),
            torque_body: Vec3::from(spec.torque),
        }
    }
}

/// Gaussian measurement noise applied to the state the controller
/// sees (the simulated truth is untouched). Off unless configured.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub seed: u64,
    /// Std dev per axis, m.
    pub position_std: f64,
    /// Std dev per axis, m/s.
    pub velocity_std: f64,
    /// Std dev of a random small-angle attitude perturbation, deg.
    pub attitude_std_deg: f64,
    /// Std dev per axis, rad/s.
    pub rate_std: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            position_std: 0.0,
            velocity_std: 0.0,
            attitude_std_deg: 0.0,
            rate_std: 0.0,
        }
    }
}

fn default_dt() -> f64 {
    0.002
}

/// A complete run description. Deserializes from TOML.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Seconds.
    pub duration: f64,
    /// Control and integration step, seconds.
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub trajectory: TrajectorySpec,
    /// Commanded tilt before the first schedule knot, degrees.
    #[serde(default)]
    pub tilt_deg: f64,
    /// Step changes of the tilt command.
    #[serde(default)]
    pub tilt_schedule: Vec<TiltKnot>,
    /// Start position; defaults to the trajectory position at t = 0.
    #[serde(default)]
    pub initial_position: Option<[f64; 3]>,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(ScenarioError::BadDuration(self.duration));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > self.duration {
            return Err(ScenarioError::BadTimeStep(self.dt));
        }
        self.trajectory.validate()?;
        for pair in self.tilt_schedule.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(ScenarioError::UnorderedSchedule);
            }
        }
        for d in &self.disturbances {
            if d.end <= d.start {
                return Err(ScenarioError::BadDisturbanceWindow {
                    start: d.start,
                    end: d.end,
                });
            }
        }
        Ok(())
    }

    /// Commanded tilt at time `t`, radians: the last knot at or
    /// before `t`, or the initial command before any knot.
    pub fn tilt_command(&self, t: f64) -> f64 {
        let mut deg = self.tilt_deg;
        for knot in &self.tilt_schedule {
            if knot.t <= t {
                deg = knot.tilt_deg;
            } else {
                break;
            }
        }
        deg.to_radians()
    }

    pub fn start_position(&self) -> Vec3 {
        match self.initial_position {
            Some(p) => Vec3::from(p),
            None => self.trajectory.sample(0.0).position,
        }
    }
}
