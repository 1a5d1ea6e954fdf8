//! Newton-Euler rigid-body dynamics with a deterministic fixed-step
//! integrator.
//!
//! The translational equation lives in the world frame, the rotational
//! one in the body frame. Propeller forces are summed from the true
//! per-rotor tilt angles delivered by the drivetrain, so the applied
//! wrench deviates from the ideal allocation-model wrench exactly the
//! way the hardware would.

use thiserror::Error;

use crate::geometry::{exp_so3, orthonormalize};
use crate::vehicle::{propeller_wrench_signed, BodyWrench, VehicleParams, NUM_ROTORS};
use crate::{Mat3, Vec3, Vec6};

/// Integration aborts once any state entry passes this magnitude.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("state diverged at t = {t:.3} s (|{entry}| = {value:.3e})")]
    Diverged {
        t: f64,
        entry: &'static str,
        value: f64,
    },
    #[error("sim step size must be positive, got {0}")]
    BadTimeStep(f64),
}

/// World-frame pose and twist of the vehicle body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState {
    /// Body origin in the world frame, m.
    pub position: Vec3,
    /// Body-to-world rotation.
    pub attitude: Mat3,
    /// Velocity in the world frame, m/s.
    pub velocity: Vec3,
    /// Angular velocity in the body frame, rad/s.
    pub angular_velocity: Vec3,
}

impl RigidBodyState {
    /// At rest at `position` with identity attitude.
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            attitude: Mat3::identity(),
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }
}

/// A rectangular force/torque pulse, active on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disturbance {
    pub start: f64,
    pub end: f64,
    /// Extra force applied at the body origin, world frame, N.
    pub force_world: Vec3,
    /// Extra torque, body frame, N m.
    pub torque_body: Vec3,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Fixed integration step, s.
    pub dt: f64,
    pub disturbances: Vec<Disturbance>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            disturbances: Vec::new(),
        }
    }
}

impl SimConfig {
    /// Summed disturbance wrench at time `t` (world force, body torque).
    pub fn disturbance_at(&self, t: f64) -> (Vec3, Vec3) {
        let mut force = Vec3::zeros();
        let mut torque = Vec3::zeros();
        for d in &self.disturbances {
            if t >= d.start && t < d.end {
                force += d.force_world;
                torque += d.torque_body;
            }
        }
        (force, torque)
    }
}

/// Total body-frame wrench produced by the six propellers at their
/// true (signed) tilt angles.
pub fn body_wrench(
    thrusts: &Vec6,
    tilts: &[f64; NUM_ROTORS],
    params: &VehicleParams,
) -> BodyWrench {
    let mut total = BodyWrench::default();
    for i in 1..=NUM_ROTORS {
        total += propeller_wrench_signed(i, thrusts[i - 1], tilts[i - 1], params);
    }
    total
}

/// Time derivatives of velocity and angular velocity for the given
/// propeller wrench and disturbance.
pub fn dynamics_rhs(
    attitude: &Mat3,
    angular_velocity: &Vec3,
    wrench: &BodyWrench,
    disturbance: (Vec3, Vec3),
    params: &VehicleParams,
) -> (Vec3, Vec3) {
    let (dist_force, dist_torque) = disturbance;
    let accel =
        Vec3::new(0.0, 0.0, -params.gravity) + (attitude * wrench.force + dist_force) / params.mass;
    let j = params.inertia_diag;
    let j_omega = j.component_mul(angular_velocity);
    let torque = wrench.torque + dist_torque - angular_velocity.cross(&j_omega);
    let ang_accel = torque.component_div(&j);
    (accel, ang_accel)
}

/// Advance the state one step of size `config.dt` with classic RK4 on
/// (position, velocity, angular velocity).
///
/// The attitude enters the stage evaluations through the world-frame
/// thrust direction; each stage rotates the base attitude by its own
/// elapsed body rotation, and the final attitude advances by the
/// midpoint angular velocity `(omega_n + omega_n+1) / 2` through the
/// exponential map, then is re-orthonormalized. Thrusts, tilt angles,
/// and disturbances are all held constant across the step (zero-order
/// hold, sampled at the step start), so a disturbance pulse whose
/// bounds land on the step grid integrates to its exact impulse.
pub fn step(
    state: &RigidBodyState,
    thrusts: &Vec6,
    tilts: &[f64; NUM_ROTORS],
    t: f64,
    params: &VehicleParams,
    config: &SimConfig,
) -> Result<RigidBodyState, SimError> {
    let dt = config.dt;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(SimError::BadTimeStep(dt));
    }
    let wrench = body_wrench(thrusts, tilts, params);
    let disturbance = config.disturbance_at(t);
    let half = 0.5 * dt;

    let rhs =
        |attitude: &Mat3, omega: &Vec3| dynamics_rhs(attitude, omega, &wrench, disturbance, params);

    // Stage 1 at the step start.
    let (a1, w1) = rhs(&state.attitude, &state.angular_velocity);
    let v1 = state.velocity;

    // Stage 2 at the midpoint.
    let om2 = state.angular_velocity + w1 * half;
    let r2 = state.attitude * exp_so3(&state.angular_velocity, half);
    let v2 = state.velocity + a1 * half;
    let (a2, w2) = rhs(&r2, &om2);

    // Stage 3, midpoint again with refreshed slopes.
    let om3 = state.angular_velocity + w2 * half;
    let r3 = state.attitude * exp_so3(&om2, half);
    let v3 = state.velocity + a2 * half;
    let (a3, w3) = rhs(&r3, &om3);

    // Stage 4 at the step end.
    let om4 = state.angular_velocity + w3 * dt;
    let r4 = state.attitude * exp_so3(&om3, dt);
    let v4 = state.velocity + a3 * dt;
    let (a4, w4) = rhs(&r4, &om4);

    let sixth = dt / 6.0;
    let position = state.position + (v1 + (v2 + v3) * 2.0 + v4) * sixth;
    let velocity = state.velocity + (a1 + (a2 + a3) * 2.0 + a4) * sixth;
    let angular_velocity = state.angular_velocity + (w1 + (w2 + w3) * 2.0 + w4) * sixth;

    let omega_mid = (state.angular_velocity + angular_velocity) * 0.5;
    let attitude = orthonormalize(&(state.attitude * exp_so3(&omega_mid, dt)));

    let next = RigidBodyState {
        position,
        attitude,
        velocity,
        angular_velocity,
    };
    check_divergence(&next, t + dt)?;
    Ok(next)
}

fn check_divergence(state: &RigidBodyState, t: f64) -> Result<(), SimError> {
    let checks = [
        ("position", state.position),
        ("velocity", state.velocity),
        ("angular_velocity", state.angular_velocity),
    ];
    for (entry, v) in checks {
        let worst = v.abs().max();
        if !worst.is_finite() || worst > DIVERGENCE_LIMIT {
            return Err(SimError::Diverged {
                t,
                entry,
                value: worst,
            });
        }
    }
    Ok(())
}
