//! Flight controller for the synchronized-tilt hexarotor.
//!
//! One controller covers the whole tilt range. A position loop turns
//! tracking error into a world-frame force request. An attitude
//! planner then decides how much of that force the propellers can
//! produce laterally at the current tilt angle and tips the desired
//! thrust axis toward the request only as far as necessary: at zero
//! tilt the vehicle banks like a conventional multirotor, at large
//! tilt it holds the reference attitude and pushes sideways directly.
//! The resulting wrench demand is mapped to six propeller thrusts
//! with a tilt-scheduled Tikhonov-regularized least-squares solve.

use crate::dynamics::RigidBodyState;
use crate::geometry::{rodrigues, vee};
use crate::vehicle::{allocation_matrix, clamp_thrusts, spin_from_thrust, VehicleParams};
use crate::{Mat3, Mat6, Vec3, Vec6};

use crate::analysis::{hover_lateral_radius, AnalysisError};

/// Feedback gains. Position gains are isotropic; attitude gains are
/// per-axis because yaw authority is much weaker than roll and pitch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerGains {
    pub position: f64,
    pub position_integral: f64,
    pub velocity: f64,
    pub attitude: Vec3,
    pub attitude_integral: Vec3,
    pub angular_rate: Vec3,
    /// Per-axis magnitude cap on the position error integral, m s.
    pub position_integral_limit: f64,
    /// Per-axis magnitude cap on the attitude error integral, rad s.
    pub attitude_integral_limit: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        // Integral gains are sized so the slowest closed-loop pole on
        // each axis decays faster than 0.7/s: after a tilt change the
        // integrators re-absorb the drivetrain bias within the 2 s
        // settling window instead of bleeding into steady state.
        Self {
            position: 50.0,
            position_integral: 50.0,
            velocity: 14.14,
            attitude: Vec3::new(15.0, 15.0, 6.0),
            attitude_integral: Vec3::new(10.0, 10.0, 5.0),
            angular_rate: Vec3::new(1.5, 1.5, 0.5),
            position_integral_limit: 0.5,
            attitude_integral_limit: 0.5,
        }
    }
}

/// Tilt-scheduled Tikhonov weight for the thrust allocation solve:
/// `gamma(alpha) = k1 / (|alpha| + k2)`. Near zero tilt the allocation
/// matrix loses rank and the weight grows to keep the normal matrix
/// well conditioned; at working tilt angles it fades out so the
/// allocation error stays negligible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TikhonovParams {
    pub k1: f64,
    pub k2: f64,
}

impl Default for TikhonovParams {
    fn default() -> Self {
        // k1 is sized so the hover thrust bias at zero tilt stays
        // around 5e-7 N, half the 1e-6 N accuracy budget; see
        // `calibrate_regularization`.
        Self {
            k1: 1.2e-8,
            k2: 0.02,
        }
    }
}

impl TikhonovParams {
    pub fn gamma(&self, alpha: f64) -> f64 {
        self.k1 / (alpha.abs() + self.k2)
    }
}

/// Quadratic model of the lateral force radius available at hover as
/// a function of tilt angle, with a safety margin. Below `dead_zone`
/// the bound is zero: lateral force demand is delegated entirely to
/// the attitude planner and the ill-conditioned lateral columns of
/// the allocation matrix are never exercised.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaturationModel {
    /// `[c0, c1, c2]`: radius ~ c0 + c1 a + c2 a^2, angle in radians.
    pub poly: [f64; 3],
    pub margin: f64,
    pub dead_zone: f64,
}

/// Least-squares fit of the attainable lateral radius over the tilt
/// range, frozen from `calibrate_lateral_bound` on the default
/// vehicle (see the calibration test).
#[allow(clippy::excessive_precision)] // frozen at full f64 precision
pub const DEFAULT_SATURATION_POLY: [f64; 3] = [
    -3.34187674050671124e-1,
    1.91178842691409301e1,
    -1.10738103114746220e1,
];

impl Default for SaturationModel {
    fn default() -> Self {
        Self {
            poly: DEFAULT_SATURATION_POLY,
            margin: 0.9,
            dead_zone: 2.0_f64.to_radians(),
        }
    }
}

impl SaturationModel {
    /// Lateral force magnitude the controller may request at tilt
    /// `alpha`, N.
    pub fn lateral_bound(&self, alpha: f64) -> f64 {
        let a = alpha.abs();
        if a < self.dead_zone {
            return 0.0;
        }
        let r = self.poly[0] + self.poly[1] * a + self.poly[2] * a * a;
        self.margin * r.max(0.0)
    }
}

/// Integrator state carried between control steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ControllerState {
    pub position_integral: Vec3,
    pub attitude_integral: Vec3,
    /// True if the previous step saturated a thrust; both integrators
    /// freeze for the following step so they cannot wind up against
    /// an actuator limit.
    pub thrust_clamped: bool,
}

/// Trajectory sample the controller tracks.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePose {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub attitude: Mat3,
}

impl ReferencePose {
    pub fn hover(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            attitude: Mat3::identity(),
        }
    }
}

/// Everything one control step produces, including the updated
/// integrator state.
#[derive(Clone, Debug)]
pub struct ControlOutput {
    /// Commanded per-propeller thrusts after clamping, N.
    pub thrusts: Vec6,
    /// Spin rates realizing `thrusts`, Hz.
    pub spins: Vec6,
    /// Body-frame wrench requested from the allocation.
    pub wrench_demand: Vec6,
    pub desired_attitude: Mat3,
    /// World-frame force the position loop asked for, N.
    pub force_reference: Vec3,
    /// True if the lateral component of the body-frame force demand
    /// hit the saturation bound this step.
    pub lateral_saturated: bool,
    /// Bound in effect this step, N.
    pub lateral_bound: f64,
    /// Angle by which the planner tipped the thrust axis away from
    /// the reference attitude, rad.
    pub tilt_back_angle: f64,
    pub clamped: [bool; 6],
    pub state: ControllerState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Controller {
    pub gains: ControllerGains,
    pub saturation: SaturationModel,
    pub regularization: TikhonovParams,
    pub bisection_iterations: usize,
}

impl Default for Controller {
    fn default() -> Self {
        Self {
            gains: ControllerGains::default(),
            saturation: SaturationModel::default(),
            regularization: TikhonovParams::default(),
            bisection_iterations: 20,
        }
    }
}

impl Controller {
    /// One control step at tilt angle `alpha` (the measured tilt, not
    /// the commanded one).
    pub fn step(
        &self,
        state: &ControllerState,
        vehicle: &RigidBodyState,
        reference: &ReferencePose,
        alpha: f64,
        dt: f64,
        params: &VehicleParams,
    ) -> ControlOutput {
        assert!(dt > 0.0, "time step must be positive");
        let gains = &self.gains;
        let mut next = state.clone();

        let e_p = vehicle.position - reference.position;
        let e_v = vehicle.velocity - reference.velocity;
        if !state.thrust_clamped {
            next.position_integral = clamp_components(
                next.position_integral + e_p * dt,
                gains.position_integral_limit,
            );
        }

        let force_reference = params.mass
            * (reference.acceleration + Vec3::new(0.0, 0.0, params.gravity))
            - e_p * gains.position
            - next.position_integral * gains.position_integral
            - e_v * gains.velocity;

        let lateral_bound = self.saturation.lateral_bound(alpha);
        let (desired_attitude, tilt_back_angle) = desired_orientation(
            &reference.attitude,
            &force_reference,
            lateral_bound,
            self.bisection_iterations,
        );

        // Force demand in the current body frame, lateral part bounded.
        let mut force_body = vehicle.attitude.transpose() * force_reference;
        let lateral = force_body.xy().norm();
        let lateral_saturated = lateral > lateral_bound + 1e-9;
        if lateral_saturated {
            let scale = if lateral > 0.0 {
                lateral_bound / lateral
            } else {
                0.0
            };
            force_body.x *= scale;
            force_body.y *= scale;
        }

        let e_r = attitude_error(&desired_attitude, &vehicle.attitude);
        if !state.thrust_clamped {
            next.attitude_integral = clamp_components(
                next.attitude_integral + e_r * dt,
                gains.attitude_integral_limit,
            );
        }
        let omega = vehicle.angular_velocity;
        let torque = omega.cross(&(params.inertia() * omega))
            - gains.attitude.component_mul(&e_r)
            - gains
                .attitude_integral
                .component_mul(&next.attitude_integral)
            - gains.angular_rate.component_mul(&omega);

        let mut wrench_demand = Vec6::zeros();
        wrench_demand.fixed_rows_mut::<3>(0).copy_from(&force_body);
        wrench_demand.fixed_rows_mut::<3>(3).copy_from(&torque);

        let (thrusts, clamped) = wrench_map(&wrench_demand, alpha, &self.regularization, params);
        next.thrust_clamped = clamped.iter().any(|&c| c);
        let spins = Vec6::from_iterator(thrusts.iter().map(|&t| {
            spin_from_thrust(t, params).expect("clamped thrust lies in the spin envelope")
        }));

        ControlOutput {
            thrusts,
            spins,
            wrench_demand,
            desired_attitude,
            force_reference,
            lateral_saturated,
            lateral_bound,
            tilt_back_angle,
            clamped,
            state: next,
        }
    }
}

fn clamp_components(v: Vec3, limit: f64) -> Vec3 {
    v.map(|c| c.clamp(-limit, limit))
}

/// Rotation error `0.5 (Rd' Rb - Rb' Rd)^vee`: zero when the frames
/// agree, and the torque `-K e_R` restores the desired attitude.
pub fn attitude_error(desired: &Mat3, actual: &Mat3) -> Vec3 {
    let m = desired.transpose() * actual - actual.transpose() * desired;
    vee(&m).expect("difference is antisymmetric by construction") * 0.5
}

/// Choose the desired attitude between the reference attitude and the
/// attitude that points the thrust axis along `force`.
///
/// The thrust axis is tipped from the reference axis toward `force`
/// by the smallest angle at which the remaining lateral force demand
/// fits within `lateral_bound`; that angle is found by bisection
/// (the acceptance condition is monotone along the rotation). With a
/// zero bound this reduces to thrust-vectoring flight; with a large
/// bound the reference attitude is kept and the force is produced
/// laterally.
///
/// Returns the desired attitude and the tip angle. The heading is
/// taken from the reference frame's first axis.
pub fn desired_orientation(
    reference: &Mat3,
    force: &Vec3,
    lateral_bound: f64,
    iterations: usize,
) -> (Mat3, f64) {
    let b3r: Vec3 = reference.column(2).into();
    let f_norm = force.norm();
    if f_norm < 1e-9 {
        return (*reference, 0.0);
    }
    let cross = b3r.cross(force);
    let cross_norm = cross.norm();
    if cross_norm < 1e-9 {
        // Aligned (nothing to do) or anti-aligned (no preferred tip
        // direction); keep the reference attitude either way.
        return (*reference, 0.0);
    }
    let axis = cross / cross_norm;
    let theta_max = (cross_norm / f_norm).min(1.0).asin();
    let target = (f_norm * f_norm - lateral_bound * lateral_bound)
        .max(0.0)
        .sqrt();
    let accept = |theta: f64| -> bool {
        let b3 = rodrigues(&b3r, &axis, theta).expect("axis is unit");
        force.dot(&b3) >= target
    };

    let mut theta = 0.0;
    if !accept(0.0) {
        // Aligning fully with the force always satisfies the demand,
        // so the feasible angles form an interval ending at theta_max.
        let mut best = theta_max;
        let mut probe = theta_max / 2.0;
        let mut step = theta_max / 4.0;
        for _ in 0..iterations {
            if accept(probe) {
                best = best.min(probe);
                probe -= step;
            } else {
                probe += step;
            }
            step /= 2.0;
        }
        theta = best.clamp(0.0, theta_max);
    }

    let b3d = rodrigues(&b3r, &axis, theta)
        .expect("axis is unit")
        .normalize();
    let b1r: Vec3 = reference.column(0).into();
    let mut b2d = b3d.cross(&b1r);
    let (b1d, b2d) = if b2d.norm() > 1e-9 {
        b2d = b2d.normalize();
        (b2d.cross(&b3d), b2d)
    } else {
        // Reference heading is parallel to the new thrust axis; seed
        // the frame from the reference second axis instead.
        let b2r: Vec3 = reference.column(1).into();
        let b1d = b2r.cross(&b3d).normalize();
        (b1d, b3d.cross(&b1d))
    };
    (Mat3::from_columns(&[b1d, b2d, b3d]), theta)
}

/// Unclamped Tikhonov allocation: the thrust vector minimizing
/// `|F u - wrench|^2 + gamma |u|^2` at tilt `alpha`.
pub fn allocate_thrusts(
    wrench: &Vec6,
    alpha: f64,
    reg: &TikhonovParams,
    params: &VehicleParams,
) -> Vec6 {
    let f = allocation_matrix(alpha, params);
    let normal = f.transpose() * f + Mat6::identity() * reg.gamma(alpha);
    let chol = normal
        .cholesky()
        .expect("regularized normal matrix is positive definite");
    chol.solve(&(f.transpose() * wrench))
}

/// Allocation followed by the actuator box: returns the clamped
/// thrusts and which propellers hit a bound.
pub fn wrench_map(
    wrench: &Vec6,
    alpha: f64,
    reg: &TikhonovParams,
    params: &VehicleParams,
) -> (Vec6, [bool; 6]) {
    clamp_thrusts(&allocate_thrusts(wrench, alpha, reg, params), params)
}

/// Fit the lateral saturation model from the exact attainable lateral
/// radii. `grid` is the tilt angles to sample; angles inside the dead
/// zone are skipped since the bound is zero there by construction.
pub fn calibrate_lateral_bound(
    params: &VehicleParams,
    grid: &[f64],
    margin: f64,
    dead_zone: f64,
) -> Result<SaturationModel, AnalysisError> {
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for &alpha in grid {
        if alpha < dead_zone {
            continue;
        }
        samples.push((alpha, hover_lateral_radius(alpha, params)?));
    }
    assert!(
        samples.len() >= 3,
        "need at least three tilt samples to fit"
    );
    Ok(SaturationModel {
        poly: fit_quadratic(&samples),
        margin,
        dead_zone,
    })
}

/// Choose `k1` so the equal-thrust hover solution at zero tilt is
/// biased by at most `hover_bias` newtons per propeller. At zero tilt
/// the all-ones direction is an eigenvector of the normal matrix, so
/// the bias has the closed form `f_h * gamma / (6 + gamma)` with
/// `f_h = m g / 6`; inverting it gives the largest admissible weight.
pub fn calibrate_regularization(
    params: &VehicleParams,
    k2: f64,
    hover_bias: f64,
) -> TikhonovParams {
    assert!(hover_bias > 0.0 && k2 > 0.0);
    let f_h = params.weight() / 6.0;
    assert!(hover_bias < f_h);
    let gamma0 = 6.0 * hover_bias / (f_h - hover_bias);
    TikhonovParams {
        k1: gamma0 * k2,
        k2,
    }
}

fn fit_quadratic(samples: &[(f64, f64)]) -> [f64; 3] {
    let mut ata = Mat3::zeros();
    let mut atb = Vec3::zeros();
    for &(x, y) in samples {
        let row = Vec3::new(1.0, x, x * x);
        ata += row * row.transpose();
        atb += row * y;
    }
    let sol = ata
        .cholesky()
        .expect("at least three distinct samples")
        .solve(&atb);
    [sol.x, sol.y, sol.z]
}
