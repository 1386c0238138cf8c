//! Perspective-projection face geometry.
//!
//! The crate covers the geometric half of single-image face reconstruction
//! under a pinhole camera: rendering canonical shapes into UV position maps,
//! building pixel-to-vertex correspondences from projected meshes, the
//! training losses over those quantities, EPnP + RANSAC pose recovery, the
//! 6DoF evaluation metrics, and a synthetic data generator that stands in for
//! captured faces and a trained predictor.
//!
//! Run `cargo run --example <name>` for a tour; see `examples/` in this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correspondence;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod mesh;
pub mod metrics;
pub mod pfm;
pub mod pnp;
pub mod raster;
pub mod synth;
pub mod uvmap;

pub use correspondence::{CorrespondenceMatrix, PixelSet, SegmentationMask};
pub use geometry::{CameraIntrinsics, EulerAngles, OrthographicParams, RigidPose, Vec2, Vec3};
pub use mesh::TriangleMesh;
pub use metrics::PoseMetrics;
pub use pnp::{PnpProblem, RansacConfig};
pub use uvmap::UvPositionMap;
