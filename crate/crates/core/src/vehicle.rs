//! Physical parameters, propeller layout, thrust model, and the
//! allocation matrices mapping per-propeller thrusts to body force and
//! torque.
//!
//! Rotor indices are 1-based throughout (`1..=6`), matching the
//! counter-clockwise hexagon layout: rotor `i` sits at angle
//! `(i-1) * 60 deg` from the body x axis, and its tilt direction
//! alternates with parity, `(-1)^(i-1) * alpha`. Odd rotors spin
//! counter-clockwise, even rotors clockwise, so propeller drag torques
//! alternate in sign as well.

use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::geometry::{rot_x, rot_z};
use crate::{Mat3, Mat3x6, Mat6, Vec3, Vec6};

pub const NUM_ROTORS: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("spin range must satisfy 0 <= min < max, got [{min}, {max}]")]
    SpinRange { min: f64, max: f64 },
    #[error("tilt range must satisfy 0 = min <= max < pi/2, got [{min}, {max}] rad")]
    TiltRange { min: f64, max: f64 },
    #[error("thrust must be nonnegative, got {0}")]
    NegativeThrust(f64),
    #[error("spin rate must be nonnegative, got {0}")]
    NegativeSpin(f64),
}

/// Rigid-body and actuator constants. Defaults describe the reference
/// platform (3.1 kg, 0.305 m arms, 35 deg tilt ceiling).
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleParams {
    /// Total mass, kg.
    pub mass: f64,
    /// Principal moments of inertia (body frame is principal), kg m^2.
    pub inertia_diag: Vec3,
    /// Hub distance from the body origin, m.
    pub arm_length: f64,
    /// Thrust per squared spin rate, N/Hz^2 (`f = c_f * w^2`).
    pub thrust_coeff: f64,
    /// Drag-torque moment arm, m (`|tau_drag| = c_f_tau * f`).
    pub drag_torque_coeff: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Slowest controllable spin rate, Hz.
    pub spin_min: f64,
    /// Fastest allowed spin rate, Hz.
    pub spin_max: f64,
    /// Lower end of the synchronized tilt range, rad (zero: the
    /// mechanism does not tilt backwards in flight).
    pub tilt_min: f64,
    /// Upper end of the synchronized tilt range, rad.
    pub tilt_max: f64,
    /// Tilt servo slew limit, rad/s.
    pub tilt_rate_limit: f64,
    /// Rated thrust per propeller, N. The spin ceiling binds slightly
    /// above this; feasibility checks use the spin bounds.
    pub max_thrust: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 3.1,
            inertia_diag: Vec3::new(0.089, 0.091, 0.164),
            arm_length: 0.305,
            thrust_coeff: 9.9e-4,
            drag_torque_coeff: 1.9e-2,
            gravity: 9.81,
            spin_min: 16.0,
            spin_max: 102.0,
            tilt_min: 0.0,
            tilt_max: 35f64.to_radians(),
            tilt_rate_limit: 10f64.to_radians(),
            max_thrust: 10.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("mass", self.mass),
            ("inertia_diag.x", self.inertia_diag.x),
            ("inertia_diag.y", self.inertia_diag.y),
            ("inertia_diag.z", self.inertia_diag.z),
            ("arm_length", self.arm_length),
            ("thrust_coeff", self.thrust_coeff),
            ("drag_torque_coeff", self.drag_torque_coeff),
            ("gravity", self.gravity),
            ("tilt_rate_limit", self.tilt_rate_limit),
            ("max_thrust", self.max_thrust),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        if !(0.0 <= self.spin_min && self.spin_min < self.spin_max) {
            return Err(ModelError::SpinRange {
                min: self.spin_min,
                max: self.spin_max,
            });
        }
        if !(self.tilt_min == 0.0
            && self.tilt_min <= self.tilt_max
            && self.tilt_max < std::f64::consts::FRAC_PI_2)
        {
            return Err(ModelError::TiltRange {
                min: self.tilt_min,
                max: self.tilt_max,
            });
        }
        Ok(())
    }

    /// Body-frame inertia tensor (diagonal).
    pub fn inertia(&self) -> Mat3 {
        Mat3::from_diagonal(&self.inertia_diag)
    }

    /// Total weight, N.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Smallest thrust a spinning propeller can hold, N.
    pub fn thrust_floor(&self) -> f64 {
        self.thrust_coeff * self.spin_min * self.spin_min
    }

    /// Largest thrust the spin ceiling allows, N.
    pub fn thrust_ceiling(&self) -> f64 {
        self.thrust_coeff * self.spin_max * self.spin_max
    }
}

/// Force and torque expressed in the same frame (body unless a call
/// site says otherwise).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BodyWrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Add for BodyWrench {
    type Output = BodyWrench;
    fn add(self, rhs: BodyWrench) -> BodyWrench {
        BodyWrench {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
        }
    }
}

impl AddAssign for BodyWrench {
    fn add_assign(&mut self, rhs: BodyWrench) {
        self.force += rhs.force;
        self.torque += rhs.torque;
    }
}

fn check_rotor_index(i: usize) {
    assert!(
        (1..=NUM_ROTORS).contains(&i),
        "rotor index must be in 1..=6, got {i}"
    );
}

/// Hexagon angle of rotor `i` from the body x axis, rad.
pub fn rotor_azimuth(i: usize) -> f64 {
    check_rotor_index(i);
    (i as f64 - 1.0) * std::f64::consts::FRAC_PI_3
}

/// Tilt alternation sign of rotor `i`: `+1` for odd rotors, `-1` for
/// even ones.
pub fn tilt_sign(i: usize) -> f64 {
    check_rotor_index(i);
    if i % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Body-frame attitude of rotor `i` at its own (signed) tilt angle.
pub fn propeller_attitude_signed(i: usize, tilt: f64) -> Mat3 {
    check_rotor_index(i);
    rot_z(rotor_azimuth(i)) * rot_x(tilt)
}

/// Body-frame attitude of rotor `i` when the synchronized tilt angle
/// is `alpha`; the alternating sign is applied internally.
pub fn propeller_attitude(i: usize, alpha: f64) -> Mat3 {
    propeller_attitude_signed(i, tilt_sign(i) * alpha)
}

/// Hub position of rotor `i` in the body frame, m.
pub fn propeller_position(i: usize, params: &VehicleParams) -> Vec3 {
    check_rotor_index(i);
    rot_z(rotor_azimuth(i)) * Vec3::new(params.arm_length, 0.0, 0.0)
}

/// Thrust force plus moment (lever arm and drag torque) of rotor `i`
/// at its own signed tilt angle, body frame.
pub fn propeller_wrench_signed(
    i: usize,
    thrust: f64,
    tilt: f64,
    params: &VehicleParams,
) -> BodyWrench {
    check_rotor_index(i);
    let force = propeller_attitude_signed(i, tilt) * Vec3::new(0.0, 0.0, thrust);
    // Odd rotors spin counter-clockwise, so their aerodynamic drag
    // torque points against the thrust axis: sign (-1)^i.
    let drag_sign = -tilt_sign(i);
    let torque = propeller_position(i, params).cross(&force)
        + force * (drag_sign * params.drag_torque_coeff);
    BodyWrench { force, torque }
}

/// [`propeller_wrench_signed`] at the synchronized tilt angle `alpha`.
pub fn propeller_wrench(i: usize, thrust: f64, alpha: f64, params: &VehicleParams) -> BodyWrench {
    propeller_wrench_signed(i, thrust, tilt_sign(i) * alpha, params)
}

/// Force allocation block: column `i` is the body-frame thrust
/// direction of rotor `i`, so `allocation_force(alpha) * u` is the
/// total body force for thrusts `u`.
pub fn allocation_force(alpha: f64) -> Mat3x6 {
    let mut f1 = Mat3x6::zeros();
    for i in 1..=NUM_ROTORS {
        let axis = propeller_attitude(i, alpha) * Vec3::z();
        f1.set_column(i - 1, &axis);
    }
    f1
}

/// Torque allocation block: column `i` is the body torque per unit
/// thrust of rotor `i` (lever arm plus drag).
pub fn allocation_torque(alpha: f64, params: &VehicleParams) -> Mat3x6 {
    let mut f2 = Mat3x6::zeros();
    for i in 1..=NUM_ROTORS {
        let wrench = propeller_wrench(i, 1.0, alpha, params);
        f2.set_column(i - 1, &wrench.torque);
    }
    f2
}

/// Stacked 6x6 allocation matrix (force rows over torque rows).
pub fn allocation_matrix(alpha: f64, params: &VehicleParams) -> Mat6 {
    let f1 = allocation_force(alpha);
    let f2 = allocation_torque(alpha, params);
    let mut f = Mat6::zeros();
    f.fixed_view_mut::<3, 6>(0, 0).copy_from(&f1);
    f.fixed_view_mut::<3, 6>(3, 0).copy_from(&f2);
    f
}

/// Thrust produced at spin rate `spin` (Hz), N.
pub fn thrust_from_spin(spin: f64, params: &VehicleParams) -> Result<f64, ModelError> {
    if spin < 0.0 {
        return Err(ModelError::NegativeSpin(spin));
    }
    Ok(params.thrust_coeff * spin * spin)
}

/// Spin rate required for `thrust` (N), Hz.
pub fn spin_from_thrust(thrust: f64, params: &VehicleParams) -> Result<f64, ModelError> {
    if thrust < 0.0 {
        return Err(ModelError::NegativeThrust(thrust));
    }
    Ok((thrust / params.thrust_coeff).sqrt())
}

/// True iff every thrust maps to a spin rate within the spin bounds.
pub fn input_feasible(u: &Vec6, params: &VehicleParams) -> bool {
    let lo = params.thrust_floor();
    let hi = params.thrust_ceiling();
    u.iter().all(|&f| f >= lo && f <= hi)
}

/// Clamp each thrust into the spin-feasible interval; the flag vector
/// marks the entries that moved.
pub fn clamp_thrusts(u: &Vec6, params: &VehicleParams) -> (Vec6, [bool; 6]) {
    let lo = params.thrust_floor();
    let hi = params.thrust_ceiling();
    let mut clamped = [false; 6];
    let mut out = *u;
    for (k, f) in out.iter_mut().enumerate() {
        let c = f.clamp(lo, hi);
        if c != *f {
            clamped[k] = true;
            *f = c;
        }
    }
    (out, clamped)
}
