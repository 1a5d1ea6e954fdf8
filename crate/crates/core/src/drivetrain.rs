//! Tilt-servo drivetrain kinematics.
//!
//! One servo rotates a central shaft; a gear stage (ratio `k`) and two
//! mirrored chains of universal joints distribute that rotation to the
//! six propeller groups. Universal joints transmit rotation exactly
//! only when straight: under a bend angle `beta` the output leads and
//! lags the input within each turn, and the error compounds along the
//! chain. Rotors tap the chain after 1, 3, or 5 joints depending on
//! their position, so the six true tilt angles spread around the
//! commanded one.

use thiserror::Error;

use crate::vehicle::{tilt_sign, VehicleParams, NUM_ROTORS};

/// Joints between the servo and each rotor's tilt axis, rotor order.
pub const JOINT_COUNTS: [usize; NUM_ROTORS] = [1, 3, 5, 5, 3, 1];

#[derive(Debug, Error, PartialEq)]
pub enum DrivetrainError {
    #[error("gear ratio must be in (0, 1], got {0}")]
    GearRatio(f64),
    #[error("bend angle must be in [0, pi/2), got {0} rad")]
    BendAngle(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivetrainParams {
    /// Gear ratio between shaft angle and tilt angle (`alpha = k * gamma`).
    pub gear_ratio: f64,
    /// Bend angle of every universal joint in the chain, rad.
    pub bend_angle: f64,
}

impl Default for DrivetrainParams {
    fn default() -> Self {
        Self {
            gear_ratio: 0.05,
            bend_angle: 30f64.to_radians(),
        }
    }
}

impl DrivetrainParams {
    pub fn validate(&self) -> Result<(), DrivetrainError> {
        if !(self.gear_ratio > 0.0 && self.gear_ratio <= 1.0) {
            return Err(DrivetrainError::GearRatio(self.gear_ratio));
        }
        if !(self.bend_angle >= 0.0 && self.bend_angle < std::f64::consts::FRAC_PI_2) {
            return Err(DrivetrainError::BendAngle(self.bend_angle));
        }
        Ok(())
    }
}

fn wrap_to_pi(x: f64) -> f64 {
    use std::f64::consts::TAU;
    x - TAU * (x / TAU).round()
}

/// True per-rotor tilt angles (signed, rotor order) for a commanded
/// synchronized angle.
///
/// The shaft turns `gamma_0 = alpha_des / k`, typically several full
/// revolutions. Each universal joint maps its input angle through
/// `atan2(sin g, cos beta * cos g)`; that relation is periodic while
/// the physical shaft angle is continuous, so the principal value is
/// re-anchored to the input's turn count before feeding the next
/// joint. With `beta = 0` the chain is lossless and every output is
/// exactly `(-1)^(i-1) * alpha_des`.
pub fn cardan_chain(alpha_des: f64, params: &DrivetrainParams) -> [f64; NUM_ROTORS] {
    let cos_beta = params.bend_angle.cos();
    // gamma[j] is the shaft angle after j joints.
    let mut gamma = [0.0; 6];
    gamma[0] = alpha_des / params.gear_ratio;
    for j in 1..6 {
        let g = gamma[j - 1];
        let principal = g.sin().atan2(cos_beta * g.cos());
        gamma[j] = g + wrap_to_pi(principal - g);
    }
    let mut tilt = [0.0; NUM_ROTORS];
    for i in 1..=NUM_ROTORS {
        tilt[i - 1] = params.gear_ratio * tilt_sign(i) * gamma[JOINT_COUNTS[i - 1]];
    }
    tilt
}

/// Tilt actuator state: the commanded angle, the rate-limited servo
/// output, and the per-rotor angles the drivetrain actually delivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltState {
    /// Most recent commanded angle, rad (not yet clamped or slewed).
    pub command: f64,
    /// Servo output angle, rad; follows the command under the slew limit.
    pub actual: f64,
    /// Servo rate over the last step, rad/s.
    pub rate: f64,
    /// True signed tilt angle of each rotor, rad.
    pub per_rotor: [f64; NUM_ROTORS],
}

impl TiltState {
    /// State of a servo that has settled at `alpha`.
    pub fn settled(alpha: f64, params: &DrivetrainParams) -> Self {
        Self {
            command: alpha,
            actual: alpha,
            rate: 0.0,
            per_rotor: cardan_chain(alpha, params),
        }
    }

    /// Largest deviation between any rotor's tilt magnitude and the
    /// servo output, rad.
    pub fn max_divergence(&self) -> f64 {
        self.per_rotor
            .iter()
            .map(|t| (t.abs() - self.actual.abs()).abs())
            .fold(0.0, f64::max)
    }
}

/// Advance the servo one step toward `alpha_ref`.
///
/// The target is clamped into the vehicle's tilt range, the move is
/// limited by the slew rate, and the per-rotor angles are recomputed
/// from the new servo output.
pub fn servo_step(
    state: &TiltState,
    alpha_ref: f64,
    dt: f64,
    vehicle: &VehicleParams,
    params: &DrivetrainParams,
) -> TiltState {
    assert!(dt > 0.0, "servo step needs dt > 0, got {dt}");
    let target = alpha_ref.clamp(vehicle.tilt_min, vehicle.tilt_max);
    let max_move = vehicle.tilt_rate_limit * dt;
    let delta = (target - state.actual).clamp(-max_move, max_move);
    let actual = state.actual + delta;
    TiltState {
        command: alpha_ref,
        actual,
        rate: delta / dt,
        per_rotor: cardan_chain(actual, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn params_validate() {
        DrivetrainParams::default().validate().unwrap();
        assert!(matches!(
            DrivetrainParams {
                gear_ratio: 0.0,
                ..Default::default()
            }
            .validate(),
            Err(DrivetrainError::GearRatio(_))
        ));
        assert!(matches!(
            DrivetrainParams {
                bend_angle: std::f64::consts::FRAC_PI_2,
                ..Default::default()
            }
            .validate(),
            Err(DrivetrainError::BendAngle(_))
        ));
    }

    #[test]
    fn straight_chain_is_lossless_even_across_turns() {
        // alpha = 35 deg with k = 0.05 means the shaft winds ~2 full
        // revolutions; a straight chain must still be exact.
        let params = DrivetrainParams {
            gear_ratio: 0.05,
            bend_angle: 0.0,
        };
        for alpha in [0.0, deg(0.1), deg(10.0), deg(35.0)] {
            let tilt = cardan_chain(alpha, &params);
            for i in 1..=NUM_ROTORS {
                assert_relative_eq!(tilt[i - 1], tilt_sign(i) * alpha, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_joint_relation_matches_the_closed_form() {
        // k = 1 keeps the shaft within one turn so the closed-form
        // joint relation applies directly.
        let params = DrivetrainParams {
            gear_ratio: 1.0,
            bend_angle: deg(30.0),
        };
        let alpha = deg(20.0);
        let tilt = cardan_chain(alpha, &params);
        let g1 = alpha.sin().atan2(deg(30.0).cos() * alpha.cos());
        assert_relative_eq!(tilt[0], g1, epsilon = 1e-12);
        // The joint leads by a couple of degrees here, and the error
        // compounds towards the five-joint rotors.
        assert!(tilt[0] > alpha + deg(2.0));
        assert!(tilt[2] > tilt[0]);
        assert!((tilt[2] - alpha).abs() > deg(10.0));
    }

    #[test]
    fn opposite_rotors_mirror_exactly() {
        let params = DrivetrainParams::default();
        let tilt = cardan_chain(deg(27.0), &params);
        assert_eq!(tilt[0], -tilt[5]);
        assert_eq!(tilt[1], -tilt[4]);
        assert_eq!(tilt[2], -tilt[3]);
    }

    #[test]
    fn divergence_at_full_tilt_is_about_a_degree() {
        let params = DrivetrainParams::default();
        let state = TiltState::settled(deg(35.0), &params);
        let spread = state.max_divergence();
        assert!(
            spread > deg(0.2) && spread < deg(3.0),
            "expected order-1-degree spread, got {:.3} deg",
            spread.to_degrees()
        );
    }

    #[test]
    fn servo_slews_clamps_and_settles() {
        let vehicle = VehicleParams::default();
        let params = DrivetrainParams::default();
        let dt = 0.002;
        let mut state = TiltState::settled(0.0, &params);

        // Command beyond the range: converge to and hold the ceiling.
        let mut t = 0.0;
        while t < 5.0 {
            state = servo_step(&state, deg(50.0), dt, &vehicle, &params);
            assert!(state.rate.abs() <= vehicle.tilt_rate_limit + 1e-12);
            assert!(state.actual <= vehicle.tilt_max + 1e-12);
            t += dt;
        }
        assert_relative_eq!(state.actual, vehicle.tilt_max, epsilon = 1e-9);
        assert_eq!(state.command, deg(50.0));
        assert_eq!(state.per_rotor, cardan_chain(state.actual, &params));

        // 35 deg back to zero at 10 deg/s takes 3.5 s.
        let mut t = 0.0;
        let mut reached = f64::INFINITY;
        while t < 5.0 {
            state = servo_step(&state, 0.0, dt, &vehicle, &params);
            t += dt;
            if state.actual == 0.0 && reached.is_infinite() {
                reached = t;
            }
        }
        assert_relative_eq!(state.actual, 0.0, epsilon = 1e-12);
        assert!((reached - 3.5).abs() < 0.01, "settled after {reached} s");
    }

    proptest! {
        #[test]
        fn chain_outputs_stay_finite_and_mirrored(
            alpha in 0.0f64..0.62,
            bend in 0.0f64..0.8,
            k in 0.01f64..1.0,
        ) {
            let params = DrivetrainParams { gear_ratio: k, bend_angle: bend };
            let tilt = cardan_chain(alpha, &params);
            for t in tilt {
                prop_assert!(t.is_finite());
            }
            prop_assert_eq!(tilt[0], -tilt[5]);
            prop_assert_eq!(tilt[1], -tilt[4]);
            prop_assert_eq!(tilt[2], -tilt[3]);
        }

        #[test]
        fn servo_never_exceeds_rate_or_range(
            start in 0.0f64..0.61,
            reference in -0.3f64..1.0,
            dt in 1e-4f64..0.05,
        ) {
            let vehicle = VehicleParams::default();
            let params = DrivetrainParams::default();
            let state = TiltState::settled(start, &params);
            let next = servo_step(&state, reference, dt, &vehicle, &params);
            prop_assert!((next.actual - state.actual).abs() <= vehicle.tilt_rate_limit * dt + 1e-15);
            prop_assert!(next.actual >= vehicle.tilt_min - 1e-15);
            prop_assert!(next.actual <= vehicle.tilt_max + 1e-15);
        }
    }
}
