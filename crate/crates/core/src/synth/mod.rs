//! Synthetic stand-ins for captured faces and for a trained predictor.
//!
//! [`make_synthetic_face`] builds a face-sized mesh, [`generate_samples`]
//! poses it and derives pixels, ground-truth correspondences and masks,
//! [`corrupt`] perturbs those like an imperfect network would, and
//! [`generate_dataset`] writes everything to disk behind a manifest.

mod dataset;
mod face;
mod noise;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::{
    build_gt_correspondence_with, rasterize_segmentation, sample_pixels, CorrespondenceError, CorrespondenceMatrix,
    PixelSet, SegmentationMask, WeightMode, DEFAULT_PIXEL_COUNT, ROW_SUM_TOLERANCE,
};
use crate::geometry::{euler_to_rotation, CameraIntrinsics, EulerAngles, RigidPose, Vec3, MIN_DEPTH};
use crate::mesh::{MeshError, TriangleMesh};
use crate::pfm::PfmError;

pub use dataset::{generate_dataset, load_dataset, Manifest, ManifestSample, PoseRecord, MANIFEST_FILE};
pub use face::{make_synthetic_face, FaceGrid, DEFAULT_FACE_VERTICES};
pub use noise::{corrupt, Corrupted, NoiseModel};

pub const DEFAULT_WIDTH: usize = 1280;
pub const DEFAULT_HEIGHT: usize = 720;

/// Attempts per sample before giving up on finding a usable pose.
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("cannot build a face with {requested} vertices (nearest valid: {nearest})")]
    InvalidCount { requested: usize, nearest: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Pfm(#[from] PfmError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error("sample {id}: no usable pose after {attempts} attempts")]
    NoUsablePose { id: usize, attempts: u64 },
    #[error("sample {id} is inconsistent: {msg}")]
    Inconsistent { id: usize, msg: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SynthError {
    /// Whether the failure came from the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            SynthError::Io(_)
                | SynthError::Correspondence(CorrespondenceError::Io(_))
                | SynthError::Mesh(MeshError::Io(_))
                | SynthError::Pfm(PfmError::Io(_))
        )
    }
}

/// Inclusive uniform sampling ranges. Angles in degrees, translations in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseRanges {
    pub yaw: [f64; 2],
    pub pitch: [f64; 2],
    pub roll: [f64; 2],
    pub tx: [f64; 2],
    pub ty: [f64; 2],
    pub tz: [f64; 2],
}

impl Default for PoseRanges {
    fn default() -> Self {
        Self {
            yaw: [-60.0, 60.0],
            pitch: [-40.0, 40.0],
            roll: [-30.0, 30.0],
            tx: [-0.15, 0.15],
            ty: [-0.15, 0.15],
            tz: [0.3, 0.9],
        }
    }
}

impl PoseRanges {
    pub fn validate(&self) -> Result<(), SynthError> {
        let named = [
            ("yaw", self.yaw),
            ("pitch", self.pitch),
            ("roll", self.roll),
            ("tx", self.tx),
            ("ty", self.ty),
            ("tz", self.tz),
        ];
        for (name, [lo, hi]) in named {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(SynthError::InvalidConfig(format!("{name} range must be finite")));
            }
            if lo > hi {
                return Err(SynthError::InvalidConfig(format!("{name} range has min {lo} > max {hi}")));
            }
        }
        if self.tz[0] <= 0.0 {
            return Err(SynthError::InvalidConfig(format!("tz min must be positive, got {}", self.tz[0])));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Independent uniform draw of each pose component.
pub fn sample_pose(ranges: &PoseRanges, seed: u64) -> RigidPose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = EulerAngles::new(draw(&mut rng, ranges.yaw), draw(&mut rng, ranges.pitch), draw(&mut rng, ranges.roll));
    let t = Vec3::new(draw(&mut rng, ranges.tx), draw(&mut rng, ranges.ty), draw(&mut rng, ranges.tz));
    RigidPose { rotation: euler_to_rotation(&e), translation: t }
}

/// SplitMix64 finalizer over `seed` and `stream`: independent per-item
/// seeds that do not depend on evaluation order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub samples: usize,
    pub seed: u64,
    /// Pixels sampled per face.
    pub m: usize,
    pub face_vertices: usize,
    pub ranges: PoseRanges,
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub weight_mode: WeightMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            m: DEFAULT_PIXEL_COUNT,
            face_vertices: DEFAULT_FACE_VERTICES,
            ranges: PoseRanges::default(),
            intrinsics: CameraIntrinsics::default(),
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            weight_mode: WeightMode::PerspectiveCorrect,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.ranges.validate()?;
        self.intrinsics.validate().map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        if self.m < 4 {
            return Err(SynthError::InvalidConfig(format!("m must be at least 4, got {}", self.m)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidConfig("image dimensions must be positive".into()));
        }
        FaceGrid::for_vertex_count(self.face_vertices)?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<TriangleMesh, SynthError> {
        make_synthetic_face(self.seed, self.face_vertices)
    }
}

/// One posed face with everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub id: usize,
    pub mesh: Arc<TriangleMesh>,
    pub pose: RigidPose,
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub pixels: PixelSet,
    pub correspondence: CorrespondenceMatrix,
    pub mask: SegmentationMask,
}

impl SyntheticSample {
    /// Builds sample `id`, redrawing the pose until the face lies in front
    /// of the camera and covers at least one pixel.
    pub fn generate(cfg: &GeneratorConfig, mesh: Arc<TriangleMesh>, id: usize) -> Result<Self, SynthError> {
        for attempt in 0..MAX_ATTEMPTS {
            let seed = derive_seed(derive_seed(cfg.seed, id as u64), attempt);
            let pose = sample_pose(&cfg.ranges, seed);
            if mesh.vertices().iter().any(|x| pose.transform(x).z <= MIN_DEPTH) {
                continue;
            }
            let mask = rasterize_segmentation(&mesh, &pose, &cfg.intrinsics, cfg.width, cfg.height)?;
            if mask.count() == 0 {
                continue;
            }
            let pixels = sample_pixels(&mask, cfg.m, derive_seed(seed, u64::MAX))?;
            let correspondence =
                match build_gt_correspondence_with(&mesh, &pose, &cfg.intrinsics, &pixels, cfg.weight_mode) {
                    Ok(c) => c,
                    Err(CorrespondenceError::PixelOutsideFace(_)) => continue,
                    Err(e) => return Err(e.into()),
                };
            return Ok(Self {
                id,
                mesh,
                pose,
                intrinsics: cfg.intrinsics,
                width: cfg.width,
                height: cfg.height,
                pixels,
                correspondence,
                mask,
            });
        }
        Err(SynthError::NoUsablePose { id, attempts: MAX_ATTEMPTS })
    }

    /// Canonical points selected by the ground-truth correspondences.
    pub fn gt_points(&self) -> Vec<Vec3> {
        crate::correspondence::corresponding_points(&self.correspondence, self.mesh.vertices())
            .expect("correspondence width matches the mesh")
    }

    /// Re-derives what can be re-derived and compares; `tol` bounds the
    /// row weight discrepancy (text files round weights).
    pub fn check_consistency(&self, mode: WeightMode, tol: f64) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Inconsistent { id: self.id, msg });
        if self.correspondence.m() != self.pixels.len() {
            return fail(format!("{} pixels but {} correspondence rows", self.pixels.len(), self.correspondence.m()));
        }
        if self.correspondence.n() != self.mesh.vertex_count() {
            return fail(format!("{} columns for {} vertices", self.correspondence.n(), self.mesh.vertex_count()));
        }
        if (self.mask.width, self.mask.height) != (self.width, self.height) {
            return fail("mask size differs from the image size".into());
        }
        if let Some(i) = self.pixels.as_slice().iter().position(|p| !self.mask.contains(p)) {
            return fail(format!("pixel {i} lies outside the mask"));
        }
        for (i, row) in self.correspondence.rows().iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if row.len() > 3 || (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return fail(format!("row {i} is not a ground-truth row"));
            }
        }
        let mask = rasterize_segmentation(&self.mesh, &self.pose, &self.intrinsics, self.width, self.height)?;
        if mask != self.mask {
            return fail("mask does not match the posed mesh".into());
        }
        let rebuilt = build_gt_correspondence_with(&self.mesh, &self.pose, &self.intrinsics, &self.pixels, mode)?;
        for (i, (a, b)) in rebuilt.rows().iter().zip(self.correspondence.rows()).enumerate() {
            let same = a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= tol);
            if !same {
                return fail(format!("row {i} differs from the rebuilt correspondence"));
            }
        }
        Ok(())
    }
}

/// All samples of a configuration, in id order. Runs in parallel; the
/// output does not depend on the thread count.
pub fn generate_samples(cfg: &GeneratorConfig) -> Result<Vec<SyntheticSample>, SynthError> {
    cfg.validate()?;
    let mesh = Arc::new(cfg.mesh()?);
    (0..cfg.samples).into_par_iter().map(|id| SyntheticSample::generate(cfg, mesh.clone(), id)).collect()
}
