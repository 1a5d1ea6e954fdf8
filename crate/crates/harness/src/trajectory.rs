//! Reference trajectories the controller tracks, described in a form
//! that serializes naturally into scenario files.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tilthex_core::controller::ReferencePose;
use tilthex_core::geometry::{rot_x, rot_z};
use tilthex_core::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("axis must have nonzero length")]
    ZeroAxis,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Serializable trajectory description. Angles are degrees, lengths
/// meters, rates SI.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Hold one pose.
    ConstantPose {
        position: [f64; 3],
        #[serde(default)]
        yaw_deg: f64,
    },
    /// Sinusoidal position along a fixed axis with consistent
    /// velocity and acceleration feedforward:
    /// `p = center + axis * amplitude * sin(angular_rate * t)`.
    SinusoidPosition {
        center: [f64; 3],
        axis: [f64; 3],
        /// Meters.
        amplitude: f64,
        /// Radians per second.
        angular_rate: f64,
        #[serde(default)]
        yaw_deg: f64,
    },
    /// Hold position while the reference attitude rolls as
    /// `amplitude * sin(2 pi frequency t)` about the body x axis.
    SinusoidRoll {
        position: [f64; 3],
        amplitude_deg: f64,
        frequency_hz: f64,
    },
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        match self {
            Self::ConstantPose { .. } => Ok(()),
            Self::SinusoidPosition {
                axis,
                amplitude,
                angular_rate,
                ..
            } => {
                if Vec3::from(*axis).norm() < 1e-12 {
                    return Err(TrajectoryError::ZeroAxis);
                }
                for (name, value) in [("amplitude", *amplitude), ("angular_rate", *angular_rate)] {
                    if value <= 0.0 {
                        return Err(TrajectoryError::NonPositive { name, value });
                    }
                }
                Ok(())
            }
            Self::SinusoidRoll {
                amplitude_deg,
                frequency_hz,
                ..
            } => {
                for (name, value) in [
                    ("amplitude_deg", *amplitude_deg),
                    ("frequency_hz", *frequency_hz),
                ] {
                    if value <= 0.0 {
                        return Err(TrajectoryError::NonPositive { name, value });
                    }
                }
                Ok(())
            }
        }
    }

    /// Reference pose at time `t` (seconds from scenario start).
    pub fn sample(&self, t: f64) -> ReferencePose {
        match self {
            Self::ConstantPose { position, yaw_deg } => ReferencePose {
                position: Vec3::from(*position),
                velocity: Vec3::zeros(),
                acceleration: Vec3::zeros(),
                attitude: rot_z(yaw_deg.to_radians()),
            },
            Self::SinusoidPosition {
                center,
                axis,
                amplitude,
                angular_rate,
                yaw_deg,
            } => {
                let dir = Vec3::from(*axis).normalize();
                let a = *amplitude;
                let w = *angular_rate;
                let phase = w * t;
                ReferencePose {
                    position: Vec3::from(*center) + dir * (a * phase.sin()),
                    velocity: dir * (a * w * phase.cos()),
                    acceleration: -dir * (a * w * w * phase.sin()),
                    attitude: rot_z(yaw_deg.to_radians()),
                }
            }
            Self::SinusoidRoll {
                position,
                amplitude_deg,
                frequency_hz,
            } => {
                let roll =
                    amplitude_deg.to_radians() * (std::f64::consts::TAU * frequency_hz * t).sin();
                ReferencePose {
                    position: Vec3::from(*position),
                    velocity: Vec3::zeros(),
                    acceleration: Vec3::zeros(),
                    attitude: rot_x(roll),
                }
            }
        }
    }
}
