//! Camera model, rigid poses, projections and the euler convention used for
//! reporting head pose.
//!
//! Frames: the camera looks down `+z`, image origin is the top-left corner and
//! integer pixel coordinates address pixel centres. World (canonical) points
//! are in meters, pixels in pixels.

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Depths at or below this are treated as on/behind the camera plane.
pub const MIN_DEPTH: f64 = 1e-9;

/// Absolute |yaw| (degrees) beyond which the decomposition is treated as
/// gimbal locked.
pub const GIMBAL_LOCK_DEG: f64 = 89.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0} has non-positive depth")]
    NonPositiveDepth(usize),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("invalid intrinsics: focal lengths must be positive")]
    InvalidIntrinsics,
    #[error("rotation is not in SO(3)")]
    NotARotation,
    #[error("orthographic scale must be positive")]
    InvalidScale,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Pinhole intrinsics with zero skew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics);
        }
        Ok(())
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Pixel of a camera-frame point. Caller guarantees positive depth.
    #[inline]
    pub fn project(&self, pc: &Vec3) -> Vec2 {
        Vec2::new((self.fx * pc.x + self.cx * pc.z) / pc.z, (self.fy * pc.y + self.cy * pc.z) / pc.z)
    }

    /// Normalized image coordinates (K⁻¹ applied, z dropped).
    #[inline]
    pub fn normalize(&self, px: &Vec2) -> Vec2 {
        Vec2::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy)
    }
}

impl Default for CameraIntrinsics {
    /// 1280×720 camera with a 1000 px focal length.
    fn default() -> Self {
        Self { fx: 1000.0, fy: 1000.0, cx: 640.0, cy: 360.0 }
    }
}

/// World-to-camera rigid transform `x_c = R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidPose {
    /// Builds a pose, checking that `rotation` is orthonormal with det +1.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        if !is_rotation(&rotation, 1e-9) || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    #[inline]
    pub fn transform(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Geodesic angle (degrees) between the two rotations.
    pub fn rotation_angle_to(&self, other: &RigidPose) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        // atan2 form stays accurate near zero where acos loses precision
        let skew = Vec3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]);
        let sin = 0.5 * skew.norm();
        let cos = 0.5 * (rel.trace() - 1.0);
        sin.atan2(cos).to_degrees()
    }

    pub fn translation_distance_to(&self, other: &RigidPose) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Row-major rotation entries.
    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]]
    }

    pub fn from_row_major(rotation: [f64; 9], translation: [f64; 3]) -> Result<Self, GeometryError> {
        Self::new(Mat3::from_row_slice(&rotation), Vec3::from(translation))
    }
}

pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    if !r.iter().all(|v| v.is_finite()) {
        return false;
    }
    let err = r.transpose() * r - Mat3::identity();
    err.iter().all(|e| e.abs() <= tol) && (r.determinant() - 1.0).abs() <= tol
}

/// Nearest rotation in the Frobenius sense, with det forced to +1.
pub fn project_to_so3(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Rodrigues exponential map.
pub fn so3_exp(omega: &Vec3) -> Mat3 {
    Rotation3::new(*omega).into_inner()
}

/// Weak-perspective parameters `v = s·(x, y) + t2d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthographicParams {
    pub scale: f64,
    pub translation_2d: Vec2,
}

impl OrthographicParams {
    pub fn new(scale: f64, translation_2d: Vec2) -> Result<Self, GeometryError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(GeometryError::InvalidScale);
        }
        Ok(Self { scale, translation_2d })
    }
}

/// Head-pose angles in degrees under `R = Rz(roll)·Ry(yaw)·Rx(pitch)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }
}

/// Result of decomposing a rotation; `gimbal_locked` marks the degenerate
/// branch where only the sum/difference of pitch and roll is observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub angles: EulerAngles,
    pub gimbal_locked: bool,
}

pub fn rot_x(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(deg: f64) -> Mat3 {
    let (s, c) = deg.to_radians().sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn euler_to_rotation(e: &EulerAngles) -> Mat3 {
    rot_z(e.roll) * rot_y(e.yaw) * rot_x(e.pitch)
}

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_degrees(a: f64) -> f64 {
    let mut w = a % 360.0;
    if w <= -180.0 {
        w += 360.0;
    } else if w > 180.0 {
        w -= 360.0;
    }
    w
}

pub fn rotation_to_euler(r: &Mat3) -> EulerDecomposition {
    // R[2][0] = -sin(yaw); R[2][1] = cos(yaw) sin(pitch); R[2][2] = cos(yaw) cos(pitch)
    // R[1][0] = sin(roll) cos(yaw); R[0][0] = cos(roll) cos(yaw)
    let sy = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let cy = r[(2, 1)].hypot(r[(2, 2)]);
    let yaw = sy.atan2(cy).to_degrees();
    if yaw.abs() > GIMBAL_LOCK_DEG {
        // Only pitch ∓ roll is observable; roll := 0 and pitch takes the rest.
        // With roll = 0: R[0][1] = sin(yaw) sin(pitch), R[1][1] = cos(pitch).
        let pitch = (sy.signum() * r[(0, 1)]).atan2(r[(1, 1)]).to_degrees();
        return EulerDecomposition {
            angles: EulerAngles { yaw: wrap_degrees(yaw), pitch: wrap_degrees(pitch), roll: 0.0 },
            gimbal_locked: true,
        };
    }
    let pitch = r[(2, 1)].atan2(r[(2, 2)]).to_degrees();
    let roll = r[(1, 0)].atan2(r[(0, 0)]).to_degrees();
    EulerDecomposition {
        angles: EulerAngles { yaw: wrap_degrees(yaw), pitch: wrap_degrees(pitch), roll: wrap_degrees(roll) },
        gimbal_locked: false,
    }
}

/// Pinhole projection of world points under `pose`, returning pixels and
/// camera-frame depths.
pub fn project_perspective(
    points: &[Vec3],
    pose: &RigidPose,
    intr: &CameraIntrinsics,
) -> Result<(Vec<Vec2>, Vec<f64>), GeometryError> {
    let mut pixels = Vec::with_capacity(points.len());
    let mut depths = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        let pc = pose.transform(x);
        if !(pc.z > MIN_DEPTH) {
            return Err(GeometryError::NonPositiveDepth(i));
        }
        pixels.push(intr.project(&pc));
        depths.push(pc.z);
    }
    Ok((pixels, depths))
}

pub fn project_orthographic(points: &[Vec3], params: &OrthographicParams) -> Vec<Vec2> {
    points.iter().map(|x| params.scale * Vec2::new(x.x, x.y) + params.translation_2d).collect()
}

/// Closed-form least-squares weak-perspective fit of `points` to `targets`.
pub fn fit_orthographic(points: &[Vec3], targets: &[Vec2]) -> Result<OrthographicParams, GeometryError> {
    if points.len() != targets.len() {
        return Err(GeometryError::LengthMismatch(points.len(), targets.len()));
    }
    if points.len() < 2 {
        return Err(GeometryError::DegenerateConfiguration("need at least two points"));
    }
    let n = points.len() as f64;
    let mean_xy = points.iter().fold(Vec2::zeros(), |acc, p| acc + p.xy()) / n;
    let mean_v = targets.iter().fold(Vec2::zeros(), |acc, v| acc + v) / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, v) in points.iter().zip(targets) {
        let dx = p.xy() - mean_xy;
        num += dx.dot(&(v - mean_v));
        den += dx.norm_squared();
    }
    if den <= f64::EPSILON * f64::EPSILON {
        return Err(GeometryError::DegenerateConfiguration("all (x, y) coordinates coincide"));
    }
    let scale = num / den;
    if !(scale > 0.0) {
        return Err(GeometryError::DegenerateConfiguration("best-fit scale is not positive"));
    }
    Ok(OrthographicParams { scale, translation_2d: mean_v - scale * mean_xy })
}

/// Sum of squared pixel residuals of a weak-perspective model.
pub fn orthographic_residual(points: &[Vec3], targets: &[Vec2], params: &OrthographicParams) -> f64 {
    project_orthographic(points, params).iter().zip(targets).map(|(a, b)| (a - b).norm_squared()).sum()
}
