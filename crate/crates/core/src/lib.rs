//! Dynamics, control, and actuation analysis for a synchronized-tilt
//! hexarotor.
//!
//! The vehicle carries six propellers on a regular hexagon. A single
//! servo tilts all six propeller groups at once through a gear stage
//! and chains of universal joints, with the tilt direction alternating
//! around the hexagon. At zero tilt every thrust axis is vertical and
//! the platform is a conventional under-actuated hexarotor; tilting
//! opens up lateral force authority until force and torque become
//! independently assignable.
//!
//! Modules:
//! - [`geometry`]: rotation matrices, hat/vee maps, the SO(3) exponential.
//! - [`vehicle`]: physical parameters, propeller layout, thrust model,
//!   and the allocation matrices.
//! - [`drivetrain`]: tilt-servo kinematics, including the per-propeller
//!   angle spread introduced by the universal-joint chains.
//! - [`dynamics`]: Newton-Euler rigid-body model with a deterministic
//!   fixed-step integrator.
//! - [`controller`]: position-prioritized flight controller with
//!   tilt-aware lateral-force saturation and regularized thrust
//!   allocation.
//! - [`analysis`]: force efficiency, allocation rank structure, and
//!   attainable force/torque sets.

pub mod analysis;
pub mod controller;
pub mod drivetrain;
pub mod dynamics;
pub mod geometry;
pub mod vehicle;

/// 3-vector of `f64`, the working currency of the whole crate.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 6-vector of `f64`; per-propeller quantities in rotor order 1..=6.
pub type Vec6 = nalgebra::Vector6<f64>;
/// 3x3 matrix; rotation matrices are stored this way throughout.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// 6x6 matrix; the stacked force/torque allocation matrix.
pub type Mat6 = nalgebra::Matrix6<f64>;
/// 3x6 matrix; one allocation block (force or torque).
pub type Mat3x6 = nalgebra::SMatrix<f64, 3, 6>;
