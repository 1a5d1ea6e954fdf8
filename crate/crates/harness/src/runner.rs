//! Closed-loop scenario execution.
//!
//! One step: advance the tilt servo toward the scheduled command,
//! sample the trajectory, let the controller act on the (optionally
//! noise-corrupted) measured state using the servo angle, log, then
//! integrate the true dynamics under the per-rotor tilt angles the
//! joint chains actually deliver. With noise disabled the run is a
//! pure function of the inputs, so repeated runs log identical bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use tilthex_core::controller::Controller;
use tilthex_core::drivetrain::{servo_step, DrivetrainParams, TiltState};
use tilthex_core::dynamics::{step, RigidBodyState, SimConfig, SimError};
use tilthex_core::geometry::exp_so3;
use tilthex_core::vehicle::VehicleParams;
use tilthex_core::{Mat3, Vec3};

use crate::log::{euler_zyx, LogRow, RunLog};
use crate::scenario::{NoiseSpec, ScenarioError, ScenarioSpec};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{error}")]
    Diverged {
        error: SimError,
        /// Rows logged up to the failing step.
        log: Box<RunLog>,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Replaces the scenario's noise seed when set.
    pub seed: Option<u64>,
    /// Log every n-th control step (1 = every step).
    pub log_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            log_every: 1,
        }
    }
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, std: f64) -> Vec3 {
    Vec3::new(
        std * gaussian(rng),
        std * gaussian(rng),
        std * gaussian(rng),
    )
}

fn corrupt(state: &RigidBodyState, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> RigidBodyState {
    let mut measured = *state;
    measured.position += gaussian_vec(rng, noise.position_std);
    measured.velocity += gaussian_vec(rng, noise.velocity_std);
    let tilt_noise = gaussian_vec(rng, noise.attitude_std_deg.to_radians());
    measured.attitude *= exp_so3(&tilt_noise, 1.0);
    measured.angular_velocity += gaussian_vec(rng, noise.rate_std);
    measured
}

pub fn run_scenario(
    spec: &ScenarioSpec,
    vehicle: &VehicleParams,
    drivetrain: &DrivetrainParams,
    controller: &Controller,
    options: &RunOptions,
) -> Result<RunLog, RunError> {
    spec.validate()?;
    let config = SimConfig {
        dt: spec.dt,
        disturbances: spec.disturbances.iter().map(Into::into).collect(),
    };
    let start_ref = spec.trajectory.sample(0.0);
    let mut state = RigidBodyState {
        position: spec.start_position(),
        attitude: start_ref.attitude,
        velocity: start_ref.velocity,
        angular_velocity: Vec3::zeros(),
    };
    let mut cstate = tilthex_core::controller::ControllerState::default();
    let mut tilt = TiltState::settled(spec.tilt_command(0.0), drivetrain);
    let mut rng = spec
        .noise
        .as_ref()
        .map(|n| ChaCha8Rng::seed_from_u64(options.seed.unwrap_or(n.seed)));

    let steps = (spec.duration / spec.dt).round() as usize;
    let stride = options.log_every.max(1);
    let mut log = RunLog {
        rows: Vec::with_capacity(steps / stride + 1),
    };

    for k in 0..steps {
        let t = k as f64 * spec.dt;
        tilt = servo_step(&tilt, spec.tilt_command(t), spec.dt, vehicle, drivetrain);
        let reference = spec.trajectory.sample(t);
        let measured = match (&spec.noise, &mut rng) {
            (Some(noise), Some(rng)) => corrupt(&state, noise, rng),
            _ => state,
        };
        let out = controller.step(
            &cstate,
            &measured,
            &reference,
            tilt.actual,
            spec.dt,
            vehicle,
        );
        cstate = out.state.clone();

        if k % stride == 0 {
            log.rows.push(make_row(
                t,
                &state,
                &reference.position,
                &reference.attitude,
                &out,
                &tilt,
            ));
        }

        state = match step(&state, &out.thrusts, &tilt.per_rotor, t, vehicle, &config) {
            Ok(next) => next,
            Err(error) => {
                return Err(RunError::Diverged {
                    error,
                    log: Box::new(log),
                });
            }
        };
    }
    Ok(log)
}

fn make_row(
    t: f64,
    state: &RigidBodyState,
    reference_position: &Vec3,
    reference_attitude: &Mat3,
    out: &tilthex_core::controller::ControlOutput,
    tilt: &TiltState,
) -> LogRow {
    let arr = |v: &Vec3| [v.x, v.y, v.z];
    let arr6 = |v: &tilthex_core::Vec6| [v[0], v[1], v[2], v[3], v[4], v[5]];
    LogRow {
        t,
        position: arr(&state.position),
        velocity: arr(&state.velocity),
        attitude_rpy: euler_zyx(&state.attitude),
        angular_velocity: arr(&state.angular_velocity),
        reference_position: arr(reference_position),
        reference_rpy: euler_zyx(reference_attitude),
        desired_rpy: euler_zyx(&out.desired_attitude),
        tilt_command: tilt.command,
        tilt_actual: tilt.actual,
        tilt_spread: tilt.max_divergence(),
        thrusts: arr6(&out.thrusts),
        spins: arr6(&out.spins),
        clamped_count: out.clamped.iter().filter(|&&c| c).count() as u32,
        lateral_saturated: out.lateral_saturated,
        lateral_bound: out.lateral_bound,
        tilt_back_angle: out.tilt_back_angle,
    }
}
