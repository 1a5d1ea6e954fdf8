//! Minimal SO(3) toolbox: elementary rotations, the hat/vee pair, the
//! exponential map, and axis-angle rotation of vectors.
//!
//! Rotations are plain 3x3 matrices (body-to-world unless stated
//! otherwise); nothing in this crate stores quaternions or Euler
//! angles. The logging layer converts to Euler angles for readability
//! only.

use thiserror::Error;

use crate::{Mat3, Vec3};

/// Below this rotation magnitude [`exp_so3`] switches to its Taylor
/// branch; sin/cos lose relative accuracy there and the quadratic
/// expansion is exact to well below machine precision.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Tolerance on the antisymmetry and unit-axis input checks.
pub const INPUT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("matrix is not antisymmetric: max |m + m^T| entry is {0:.3e}")]
    NotAntisymmetric(f64),
    #[error("rotation axis must be unit length, got norm {0:.12}")]
    AxisNotUnit(f64),
}

/// Rotation about the x axis.
pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(
        1.0, 0.0, 0.0, //
        0.0, c, -s, //
        0.0, s, c,
    )
}

/// Rotation about the z axis.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(
        c, -s, 0.0, //
        s, c, 0.0, //
        0.0, 0.0, 1.0,
    )
}

/// Hat map: `skew(v) * w == v.cross(&w)` for every `w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of the hat map. Rejects matrices whose antisymmetry defect
/// exceeds [`INPUT_TOL`].
pub fn vee(m: &Mat3) -> Result<Vec3, GeometryError> {
    let defect = (m + m.transpose()).abs().max();
    if defect > INPUT_TOL {
        return Err(GeometryError::NotAntisymmetric(defect));
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Exponential map of `omega * dt` onto SO(3).
///
/// Uses the closed-form axis-angle expression, falling back to the
/// second-order Taylor expansion below [`SMALL_ANGLE`] so the result
/// stays exact for vanishing rates.
pub fn exp_so3(omega: &Vec3, dt: f64) -> Mat3 {
    let phi = omega * dt;
    let theta = phi.norm();
    let k = skew(&phi);
    if theta < SMALL_ANGLE {
        return Mat3::identity() + k + k * k * 0.5;
    }
    let k = k / theta;
    Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
}

/// Rotate `v` by `angle` about the unit vector `axis` (Rodrigues'
/// formula). The axis must be unit length within [`INPUT_TOL`].
pub fn rodrigues(v: &Vec3, axis: &Vec3, angle: f64) -> Result<Vec3, GeometryError> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > INPUT_TOL {
        return Err(GeometryError::AxisNotUnit(norm));
    }
    let (s, c) = angle.sin_cos();
    Ok(v * c + axis.cross(v) * s + axis * (axis.dot(v)) * (1.0 - c))
}

/// True if `m` is orthonormal with positive determinant within `tol`.
pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    let defect = (m.transpose() * m - Mat3::identity()).abs().max();
    defect <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// Project a near-rotation matrix back onto SO(3) (polar projection:
/// the orthonormal factor of the SVD). Applied after every integration
/// step to stop orthonormality drift from accumulating.
pub fn orthonormalize(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("3x3 SVD always yields U");
    let v_t = svd.v_t.expect("3x3 SVD always yields V^T");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // Input was closer to a reflection; flip the weakest direction.
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
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
    fn rot_x_matches_reference_entries() {
        let r = rot_x(deg(35.0));
        assert_relative_eq!(r[(1, 1)], 0.8192, epsilon = 5e-5);
        assert_relative_eq!(r[(2, 2)], 0.8192, epsilon = 5e-5);
        assert_relative_eq!(r[(2, 1)], deg(35.0).sin(), epsilon = 1e-15);
        assert_relative_eq!(r[(1, 2)], -deg(35.0).sin(), epsilon = 1e-15);
        assert_eq!(r[(0, 0)], 1.0);
    }

    #[test]
    fn rot_z_rotates_e1_by_60_degrees() {
        let r = rot_z(deg(60.0));
        let v = r * Vec3::x();
        assert_relative_eq!(v.x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(v.y, 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_relative_eq!(v.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vee_rejects_non_antisymmetric_input() {
        let m = Mat3::identity();
        assert!(matches!(vee(&m), Err(GeometryError::NotAntisymmetric(_))));
    }

    #[test]
    fn exp_so3_small_angle_is_second_order() {
        let omega = Vec3::new(0.0, 0.0, 1e-10);
        let r = exp_so3(&omega, 1.0);
        let linear = Mat3::identity() + skew(&omega);
        assert!((r - linear).abs().max() <= 1e-20);
    }

    #[test]
    fn exp_so3_quarter_turn_about_z() {
        let r = exp_so3(&Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), 1.0);
        assert_relative_eq!(r, rot_z(std::f64::consts::FRAC_PI_2), epsilon = 1e-15);
    }

    #[test]
    fn rodrigues_quarter_turn_sends_e1_to_e2() {
        let v = rodrigues(&Vec3::x(), &Vec3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(v, Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rodrigues_rejects_non_unit_axis() {
        let axis = Vec3::new(0.0, 0.0, 2.0);
        assert!(matches!(
            rodrigues(&Vec3::x(), &axis, 0.3),
            Err(GeometryError::AxisNotUnit(_))
        ));
    }

    #[test]
    fn orthonormalize_repairs_perturbed_rotation() {
        let r = rot_z(0.7) * rot_x(-0.3);
        let mut dirty = r;
        dirty[(0, 1)] += 1e-3;
        dirty[(2, 0)] -= 2e-3;
        let clean = orthonormalize(&dirty);
        assert!(is_rotation(&clean, 1e-12));
        assert!((clean - r).abs().max() < 5e-3);
    }

    #[test]
    fn is_rotation_rejects_reflections() {
        let mut m = Mat3::identity();
        m[(2, 2)] = -1.0;
        assert!(!is_rotation(&m, 1e-9));
    }

    proptest! {
        #[test]
        fn skew_reproduces_cross_products(
            a in proptest::array::uniform3(-10.0f64..10.0),
            b in proptest::array::uniform3(-10.0f64..10.0),
        ) {
            let a = Vec3::from(a);
            let b = Vec3::from(b);
            let lhs = skew(&a) * b;
            let rhs = a.cross(&b);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
        }

        #[test]
        fn vee_inverts_skew(v in proptest::array::uniform3(-100.0f64..100.0)) {
            let v = Vec3::from(v);
            let back = vee(&skew(&v)).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn exp_so3_lands_on_so3(
            w in proptest::array::uniform3(-20.0f64..20.0),
            dt in 1e-6f64..0.5,
        ) {
            let r = exp_so3(&Vec3::from(w), dt);
            prop_assert!(is_rotation(&r, 1e-12));
        }

        #[test]
        fn rodrigues_agrees_with_exp_map(
            v in proptest::array::uniform3(-5.0f64..5.0),
            raw_axis in proptest::array::uniform3(-1.0f64..1.0),
            angle in -3.0f64..3.0,
        ) {
            let axis = Vec3::from(raw_axis);
            prop_assume!(axis.norm() > 1e-3);
            let axis = axis.normalize();
            let v = Vec3::from(v);
            let direct = rodrigues(&v, &axis, angle).unwrap();
            let via_exp = exp_so3(&(axis * angle), 1.0) * v;
            prop_assert!((direct - via_exp).norm() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn rodrigues_preserves_norm_and_axis_component(
            v in proptest::array::uniform3(-5.0f64..5.0),
            angle in -3.0f64..3.0,
        ) {
            let v = Vec3::from(v);
            let axis = Vec3::z();
            let rotated = rodrigues(&v, &axis, angle).unwrap();
            prop_assert!((rotated.norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
            prop_assert!((rotated.z - v.z).abs() <= 1e-12 * (1.0 + v.norm()));
        }
    }
}
