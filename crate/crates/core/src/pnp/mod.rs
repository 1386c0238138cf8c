//! Pose from 2D-3D correspondences.
//!
//! [`solve_epnp`] is the O(m) control-point solver, [`solve_pnp_ransac`] wraps
//! it in a seeded minimal-sample consensus loop and finishes with
//! [`refine_pose`]. [`solve_dlt`] is an independent linear solver kept as a
//! cross-check.

mod dlt;
mod epnp;
mod ransac;
mod refine;

use thiserror::Error;

use crate::geometry::{CameraIntrinsics, RigidPose, Vec2, Vec3};

pub use dlt::solve_dlt;
pub use epnp::solve_epnp;
pub use ransac::{solve_pnp_ransac, RansacConfig, RansacOutcome};
pub use refine::{refine_pose, RefineStatus, Refinement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PnpError {
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{pixels} pixels but {points} world points")]
    LengthMismatch { pixels: usize, points: usize },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("recovered pose puts {behind} of {total} points behind the camera")]
    BehindCamera { behind: usize, total: usize },
    #[error("no consensus: best hypothesis has {0} inliers")]
    NoConsensus(usize),
    #[error("invalid ransac configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Pixels, their canonical-space points and the camera that observed them.
#[derive(Debug, Clone, PartialEq)]
pub struct PnpProblem {
    pixels: Vec<Vec2>,
    world: Vec<Vec3>,
    intr: CameraIntrinsics,
}

impl PnpProblem {
    pub const MIN_POINTS: usize = 4;

    pub fn new(pixels: Vec<Vec2>, world: Vec<Vec3>, intr: CameraIntrinsics) -> Result<Self, PnpError> {
        if pixels.len() != world.len() {
            return Err(PnpError::LengthMismatch { pixels: pixels.len(), points: world.len() });
        }
        if pixels.len() < Self::MIN_POINTS {
            return Err(PnpError::TooFewPoints { needed: Self::MIN_POINTS, got: pixels.len() });
        }
        let finite = pixels.iter().all(|p| p.iter().all(|v| v.is_finite()))
            && world.iter().all(|p| p.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(PnpError::DegenerateGeometry("non-finite input"));
        }
        Ok(Self { pixels, world, intr })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Vec2] {
        &self.pixels
    }

    pub fn world(&self) -> &[Vec3] {
        &self.world
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intr
    }

    /// Sub-problem on the given indices; `None` below the minimum size.
    pub fn subset(&self, idx: &[usize]) -> Option<Self> {
        (idx.len() >= Self::MIN_POINTS).then(|| Self {
            pixels: idx.iter().map(|&i| self.pixels[i]).collect(),
            world: idx.iter().map(|&i| self.world[i]).collect(),
            intr: self.intr,
        })
    }

    /// Per-point reprojection error in pixels (infinite behind the camera).
    pub fn reprojection_errors(&self, pose: &RigidPose) -> Vec<f64> {
        self.world.iter().zip(&self.pixels).map(|(x, v)| reprojection_error(pose, &self.intr, x, v)).collect()
    }

    pub fn reprojection_rmse(&self, pose: &RigidPose) -> f64 {
        let sq: f64 = self.reprojection_errors(pose).iter().map(|e| e * e).sum();
        (sq / self.len() as f64).sqrt()
    }
}

#[inline]
pub(crate) fn reprojection_error(pose: &RigidPose, intr: &CameraIntrinsics, x: &Vec3, v: &Vec2) -> f64 {
    let pc = pose.transform(x);
    if pc.z <= crate::geometry::MIN_DEPTH {
        return f64::INFINITY;
    }
    (intr.project(&pc) - v).norm()
}

/// Eigen-decomposition of the point cloud's scatter, sorted by decreasing
/// eigenvalue.
pub(crate) struct PrincipalAxes {
    pub centroid: Vec3,
    pub values: [f64; 3],
    pub axes: [Vec3; 3],
}

impl PrincipalAxes {
    pub fn of(points: &[Vec3]) -> Self {
        let n = points.len() as f64;
        let centroid = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
        let mut cov = nalgebra::Matrix3::<f64>::zeros();
        for p in points {
            let d = p - centroid;
            cov += d * d.transpose();
        }
        cov /= n;
        let eig = cov.symmetric_eigen();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        Self {
            centroid,
            values: order.map(|i| eig.eigenvalues[i].max(0.0)),
            axes: order.map(|i| eig.eigenvectors.column(i).into_owned()),
        }
    }

    /// Points are (numerically) collinear or coincident.
    pub fn is_degenerate(&self) -> bool {
        !(self.values[0] > 1e-24) || self.values[1] <= 1e-12 * self.values[0]
    }

    pub fn is_planar(&self) -> bool {
        self.values[2] <= PLANAR_RATIO * self.values[0]
    }
}

/// Smallest-to-largest scatter ratio below which points count as planar.
pub(crate) const PLANAR_RATIO: f64 = 1e-9;

/// Least-squares rigid alignment `camera ≈ R·world + t` (Kabsch).
pub(crate) fn align_rigid(world: &[Vec3], camera: &[Vec3]) -> RigidPose {
    let n = world.len() as f64;
    let cw = world.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let cc = camera.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut h = nalgebra::Matrix3::<f64>::zeros();
    for (pw, pc) in world.iter().zip(camera) {
        h += (pc - cc) * (pw - cw).transpose();
    }
    let rotation = crate::geometry::project_to_so3(&h);
    RigidPose { rotation, translation: cc - rotation * cw }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::geometry::{euler_to_rotation, project_perspective, EulerAngles};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_pose(rng: &mut ChaCha8Rng) -> RigidPose {
        let e = EulerAngles::new(
            rng.random_range(-60.0..60.0),
            rng.random_range(-40.0..40.0),
            rng.random_range(-30.0..30.0),
        );
        RigidPose {
            rotation: euler_to_rotation(&e),
            translation: Vec3::new(
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
                rng.random_range(0.3..0.9),
            ),
        }
    }

    pub fn face_like_points(rng: &mut ChaCha8Rng, m: usize, planar: bool) -> Vec<Vec3> {
        (0..m)
            .map(|_| {
                let z = if planar { 0.0 } else { rng.random_range(-0.04..0.04) };
                Vec3::new(rng.random_range(-0.07..0.07), rng.random_range(-0.09..0.09), z)
            })
            .collect()
    }

    pub fn problem(seed: u64, m: usize, planar: bool) -> (PnpProblem, RigidPose) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pose = random_pose(&mut rng);
        let world = face_like_points(&mut rng, m, planar);
        let intr = CameraIntrinsics::default();
        let (pixels, _) = project_perspective(&world, &pose, &intr).unwrap();
        (PnpProblem::new(pixels, world, intr).unwrap(), pose)
    }
}
