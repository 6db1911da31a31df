//! Rigid-body transforms, se(3) maps, and the stereo pinhole camera model.
//!
//! Poses are stored as a rotation matrix plus translation vector. Throughout
//! the optimizer a pose is **world-to-camera**: it is the transform applied
//! to world points before projection. Trajectory files on disk use the
//! opposite (world-from-camera) convention and are converted on read/write
//! by [`crate::io`].

use nalgebra::{Matrix3, Vector2, Vector3, Vector6};
use thiserror::Error;

/// Angle below which trigonometric ratios switch to 4th-order Taylor series.
const NEAR_ZERO_ANGLE: f64 = 1e-4;
/// Angle above which the log map extracts the axis from the symmetric part.
const NEAR_PI_ANGLE: f64 = std::f64::consts::PI - 1e-3;

/// Camera-frame depth at or below which projection is rejected.
pub const DEFAULT_DEPTH_EPSILON: f64 = 1e-6;
/// Disparity at or below which stereo triangulation is rejected.
pub const DEFAULT_DISPARITY_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    /// Point is behind (or numerically on) the camera plane; the caller must
    /// drop the residual.
    #[error("non-positive camera-frame depth {depth}")]
    NonPositiveDepth { depth: f64 },
    /// Disparity too small to triangulate: the point is effectively at
    /// infinity for this baseline.
    #[error("degenerate disparity {disparity} px")]
    DegenerateDisparity { disparity: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("matrix is not a rotation: {0}")]
    NotARotation(String),
}

/// Skew-symmetric (cross-product) matrix of `v`: `hat(v) * w == v × w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Element of se(3): translational part `rho` (meters) and rotational part
/// `phi` (axis-angle, radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub rho: Vector3<f64>,
    pub phi: Vector3<f64>,
}

impl Twist {
    pub fn zero() -> Self {
        Twist {
            rho: Vector3::zeros(),
            phi: Vector3::zeros(),
        }
    }

    pub fn new(rho: Vector3<f64>, phi: Vector3<f64>) -> Self {
        Twist { rho, phi }
    }

    /// Stacks as a 6-vector, translational part first. This ordering fixes
    /// the column layout of all pose Jacobian blocks.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.rho.x, self.rho.y, self.rho.z, self.phi.x, self.phi.y, self.phi.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Twist {
            rho: Vector3::new(v[0], v[1], v[2]),
            phi: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.rho.norm_squared() + self.phi.norm_squared()).sqrt()
    }
}

/// Rigid-body transform in SE(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, checking the rotation block is orthonormal with
    /// determinant +1 within `1e-9` per entry.
    pub fn from_parts(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if ortho > 1e-9 {
            return Err(GeometryError::NotARotation(format!(
                "RᵀR deviates from identity by {ortho:.3e}"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NotARotation(format!("det(R) = {det}")));
        }
        Ok(Pose { rotation, translation })
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Composition `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Right-multiplied retraction `self * exp(delta)`, the increment
    /// convention used by the optimizer.
    pub fn retract(&self, delta: &Twist) -> Pose {
        self.compose(&se3_exp(delta))
    }

    /// Rotation angle of `self * other⁻¹` in radians.
    pub fn angular_distance(&self, other: &Pose) -> f64 {
        let r = self.rotation * other.rotation.transpose();
        let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

/// 3D point with an identity and an optional map-plane association.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: u64,
    pub position: Vector3<f64>,
    pub plane_id: Option<u64>,
}

impl Landmark {
    pub fn new(id: u64, position: Vector3<f64>) -> Self {
        Landmark {
            id,
            position,
            plane_id: None,
        }
    }
}

/// Rectified pinhole stereo rig: focal lengths and principal point in
/// pixels, baseline in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub baseline: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, baseline: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0 && baseline > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "fx={fx}, fy={fy}, baseline={baseline} must all be positive"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite principal point".into()));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy, baseline })
    }
}

/// `sin θ / θ`, `(1-cos θ)/θ²`, `(θ-sin θ)/θ³` with series fallbacks.
fn rotation_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < NEAR_ZERO_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
        )
    } else {
        let t2 = theta * theta;
        (
            theta.sin() / theta,
            (1.0 - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    }
}

/// Exponential map se(3) → SE(3).
///
/// The rotation follows Rodrigues' formula and the translation goes through
/// the left Jacobian of SO(3).
pub fn se3_exp(xi: &Twist) -> Pose {
    let theta = xi.phi.norm();
    let (a, b, c) = rotation_coefficients(theta);
    let k = hat(&xi.phi);
    let k2 = k * k;
    let rotation = Matrix3::identity() + k * a + k2 * b;
    let v = Matrix3::identity() + k * b + k2 * c;
    Pose {
        rotation,
        translation: v * xi.rho,
    }
}

/// Rotation-vector part of the log map; `|phi|` lands in `[0, π]`.
fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos_theta = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    // Antisymmetric part: vee(R - Rᵀ)/2 = sin θ · axis.
    let s = Vector3::new(
        (r[(2, 1)] - r[(1, 2)]) / 2.0,
        (r[(0, 2)] - r[(2, 0)]) / 2.0,
        (r[(1, 0)] - r[(0, 1)]) / 2.0,
    );
    if theta < NEAR_ZERO_ANGLE {
        let t2 = theta * theta;
        // θ/sin θ expanded around zero.
        return s * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
    }
    if theta > NEAR_PI_ANGLE {
        // Near π the antisymmetric part vanishes; recover the axis from the
        // symmetric part instead: (R + Rᵀ)/2 = cosθ·I + (1-cosθ)·aaᵀ.
        let outer = ((r + r.transpose()) / 2.0 - Matrix3::identity() * cos_theta)
            / (1.0 - cos_theta);
        let j = (0..3)
            .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
            .unwrap();
        let mut axis = Vector3::new(outer[(j, 0)], outer[(j, 1)], outer[(j, 2)]);
        axis /= outer[(j, j)].max(f64::MIN_POSITIVE).sqrt();
        let axis = axis.normalize();
        let dot = s.dot(&axis);
        let axis = if dot.abs() > 1e-12 {
            // sinθ > 0 for θ < π, so s and the axis must align.
            if dot < 0.0 {
                -axis
            } else {
                axis
            }
        } else {
            // Angle is exactly π: both signs are valid, fix the branch by
            // making the first nonzero component positive.
            let lead = axis.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
            if lead < 0.0 {
                -axis
            } else {
                axis
            }
        };
        return axis * theta;
    }
    s * (theta / theta.sin())
}

/// Logarithm map SE(3) → se(3); inverse of [`se3_exp`].
pub fn se3_log(pose: &Pose) -> Twist {
    let phi = so3_log(&pose.rotation);
    let theta = phi.norm();
    let k = hat(&phi);
    let k2 = k * k;
    // V⁻¹ = I - ½φ^ + D·φ^², D = (1 - A/(2B))/θ².
    let d = if theta < NEAR_ZERO_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (a, b, _) = rotation_coefficients(theta);
        (1.0 - a / (2.0 * b)) / (theta * theta)
    };
    let v_inv = Matrix3::identity() - k / 2.0 + k2 * d;
    Twist {
        rho: v_inv * pose.translation,
        phi,
    }
}

/// Projects a world point through `pose` (world-to-camera) onto the image.
pub fn project(
    k: &CameraIntrinsics,
    pose: &Pose,
    point_world: &Vector3<f64>,
) -> Result<Vector2<f64>, GeometryError> {
    project_with_epsilon(k, pose, point_world, DEFAULT_DEPTH_EPSILON)
}

/// [`project`] with an explicit minimum-depth threshold.
pub fn project_with_epsilon(
    k: &CameraIntrinsics,
    pose: &Pose,
    point_world: &Vector3<f64>,
    depth_epsilon: f64,
) -> Result<Vector2<f64>, GeometryError> {
    let p = pose.transform(point_world);
    if p.z <= depth_epsilon {
        return Err(GeometryError::NonPositiveDepth { depth: p.z });
    }
    Ok(Vector2::new(
        k.fx * p.x / p.z + k.cx,
        k.fy * p.y / p.z + k.cy,
    ))
}

/// Recovers the camera-frame point behind a left-image pixel and stereo
/// disparity: `z = fx·baseline/disparity`.
pub fn triangulate_stereo(
    k: &CameraIntrinsics,
    pixel_left: &Vector2<f64>,
    disparity: f64,
) -> Result<Vector3<f64>, GeometryError> {
    triangulate_stereo_with_epsilon(k, pixel_left, disparity, DEFAULT_DISPARITY_EPSILON)
}

/// [`triangulate_stereo`] with an explicit minimum-disparity threshold.
pub fn triangulate_stereo_with_epsilon(
    k: &CameraIntrinsics,
    pixel_left: &Vector2<f64>,
    disparity: f64,
    disparity_epsilon: f64,
) -> Result<Vector3<f64>, GeometryError> {
    if disparity <= disparity_epsilon {
        return Err(GeometryError::DegenerateDisparity { disparity });
    }
    let z = k.fx * k.baseline / disparity;
    Ok(Vector3::new(
        (pixel_left.x - k.cx) * z / k.fx,
        (pixel_left.y - k.cy) * z / k.fy,
        z,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn test_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics::new(700.0, 700.0, 600.0, 180.0, 0.5).unwrap()
    }

    fn random_twist(rng: &mut ChaCha8Rng, max_angle: f64) -> Twist {
        let rho = Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let mut phi = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if phi.norm() == 0.0 {
            phi = Vector3::x();
        }
        let angle = rng.gen_range(0.0..max_angle);
        Twist::new(rho, phi.normalize() * angle)
    }

    #[test]
    fn exp_of_zero_twist_is_identity() {
        let p = se3_exp(&Twist::zero());
        assert_relative_eq!(p.rotation, Matrix3::identity(), epsilon = 1e-15);
        assert_relative_eq!(p.translation, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn_about_z() {
        let xi = Twist::new(Vector3::zeros(), Vector3::new(0.0, 0.0, PI / 2.0));
        let p = se3_exp(&xi);
        let mapped = p.rotation * Vector3::x();
        assert_relative_eq!(mapped, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn log_of_identity_is_zero() {
        let xi = se3_log(&Pose::identity());
        assert_eq!(xi.rho, Vector3::zeros());
        assert_eq!(xi.phi, Vector3::zeros());
    }

    #[test]
    fn log_of_pi_rotation_about_z() {
        let pose = se3_exp(&Twist::new(Vector3::zeros(), Vector3::new(0.0, 0.0, PI)));
        let xi = se3_log(&pose);
        assert_relative_eq!(xi.phi, Vector3::new(0.0, 0.0, PI), epsilon = 1e-9);
    }

    #[test]
    fn log_of_pi_rotation_fixes_axis_sign() {
        // R(π, -x) == R(π, x); the log must pick the branch whose first
        // nonzero axis component is positive.
        let pose = se3_exp(&Twist::new(Vector3::zeros(), Vector3::new(-PI, 0.0, 0.0)));
        let xi = se3_log(&pose);
        assert_relative_eq!(xi.phi, Vector3::new(PI, 0.0, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn exp_log_roundtrip_1000_random_twists() {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        for _ in 0..1000 {
            let xi = random_twist(&mut rng, 3.0);
            let back = se3_log(&se3_exp(&xi));
            assert!((back.rho - xi.rho).amax() < 1e-9, "rho mismatch for {xi:?}");
            assert!((back.phi - xi.phi).amax() < 1e-9, "phi mismatch for {xi:?}");
        }
    }

    #[test]
    fn exp_produces_valid_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let p = se3_exp(&random_twist(&mut rng, 3.1));
            assert!(Pose::from_parts(p.rotation, p.translation).is_ok());
        }
    }

    #[test]
    fn compose_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = se3_exp(&random_twist(&mut rng, 3.0));
            let e = p.compose(&p.inverse());
            assert_relative_eq!(e.rotation, Matrix3::identity(), epsilon = 1e-9);
            assert_relative_eq!(e.translation, Vector3::zeros(), epsilon = 1e-9);
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = se3_exp(&random_twist(&mut rng, 2.5));
            let b = se3_exp(&random_twist(&mut rng, 2.5));
            let c = se3_exp(&random_twist(&mut rng, 2.5));
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert_relative_eq!(left.rotation, right.rotation, epsilon = 1e-9);
            assert_relative_eq!(left.translation, right.translation, epsilon = 1e-9);
        }
    }

    #[test]
    fn optical_axis_point_maps_to_principal_point() {
        let k = test_intrinsics();
        let px = project(&k, &Pose::identity(), &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(px, Vector2::new(600.0, 180.0), epsilon = 1e-12);
    }

    #[test]
    fn pinhole_arithmetic() {
        let k = test_intrinsics();
        let px = project(&k, &Pose::identity(), &Vector3::new(1.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(px, Vector2::new(950.0, 180.0), epsilon = 1e-12);
    }

    #[test]
    fn zero_depth_is_rejected() {
        let k = test_intrinsics();
        let pose = Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::new(0.0, 0.0, -1.0),
        };
        let err = project(&k, &pose, &Vector3::new(0.0, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, GeometryError::NonPositiveDepth { .. }));
    }

    #[test]
    fn triangulation_depth_from_disparity() {
        let k = test_intrinsics();
        let p = triangulate_stereo(&k, &Vector2::new(600.0, 180.0), 7.0).unwrap();
        assert_relative_eq!(p, Vector3::new(0.0, 0.0, 50.0), epsilon = 1e-12);
    }

    #[test]
    fn zero_disparity_is_rejected() {
        let k = test_intrinsics();
        let err = triangulate_stereo(&k, &Vector2::new(600.0, 180.0), 0.0).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateDisparity { .. }));
    }

    #[test]
    fn project_triangulate_roundtrip_1000_points() {
        let k = test_intrinsics();
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        for _ in 0..1000 {
            let z = rng.gen_range(2.0..50.0);
            let p = Vector3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0), z);
            let px = project(&k, &Pose::identity(), &p).unwrap();
            let disparity = k.fx * k.baseline / p.z;
            let back = triangulate_stereo(&k, &px, disparity).unwrap();
            assert!((back - p).amax() < 1e-9);
            let px_back = project(&k, &Pose::identity(), &back).unwrap();
            assert!((px_back - px).amax() < 1e-9);
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 700.0, 0.0, 0.0, 0.5).is_err());
        assert!(CameraIntrinsics::new(700.0, 700.0, 0.0, 0.0, -0.5).is_err());
    }

    #[test]
    fn from_parts_rejects_non_rotations() {
        let err = Pose::from_parts(Matrix3::identity() * 2.0, Vector3::zeros()).unwrap_err();
        assert!(matches!(err, GeometryError::NotARotation(_)));
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::from_parts(reflect, Vector3::zeros()).is_err());
    }

    proptest! {
        #[test]
        fn prop_exp_log_roundtrip(
            rx in -4.0..4.0f64, ry in -4.0..4.0f64, rz in -4.0..4.0f64,
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
            angle in 0.0..(PI - 1e-3),
        ) {
            let axis = Vector3::new(ax, ay, az);
            prop_assume!(axis.norm() > 1e-3);
            let xi = Twist::new(Vector3::new(rx, ry, rz), axis.normalize() * angle);
            let back = se3_log(&se3_exp(&xi));
            prop_assert!((back.rho - xi.rho).amax() < 1e-9);
            prop_assert!((back.phi - xi.phi).amax() < 1e-9);
        }
    }
}
