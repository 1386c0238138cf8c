//! 2D-3D correspondences between image pixels and canonical mesh vertices.
//!
//! Ground truth comes from projecting the mesh, finding the triangle under
//! each sampled pixel and using the pixel's barycentric weights on that
//! triangle's vertices as the row of a sparse row-stochastic matrix.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{project_perspective, CameraIntrinsics, GeometryError, RigidPose, Vec2, Vec3};
use crate::io::{fmt_sig9, write_atomic};
use crate::mesh::TriangleMesh;
pub use crate::raster::{barycentric_coordinates, DegenerateTriangle};
use crate::raster::{for_each_covered_pixel, is_inside};

/// Pixels sampled per face.
pub const DEFAULT_PIXEL_COUNT: usize = 1024;

/// Row sums must be within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CorrespondenceError {
    #[error("pixel {0} is not covered by any projected triangle")]
    PixelOutsideFace(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("segmentation mask has no face pixels")]
    EmptyMask,
    #[error("encoding dimension {0} is not a positive multiple of 4")]
    InvalidDimension(usize),
    #[error("invalid correspondence row {row}: {msg}")]
    InvalidRow { row: usize, msg: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered image pixels (full-image frame).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PixelSet(pub Vec<Vec2>);

impl PixelSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec2] {
        &self.0
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("PIXELS {}\n", self.0.len());
        for p in &self.0 {
            let _ = writeln!(out, "{:?} {:?}", p.x, p.y);
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, CorrespondenceError> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: &str| CorrespondenceError::Parse { line: line + 1, msg: msg.to_string() };
        let (_, header) = lines.next().ok_or_else(|| perr(0, "empty file"))?;
        let count: usize = header
            .strip_prefix("PIXELS ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| perr(0, "expected `PIXELS <m>`"))?;
        let mut pixels = Vec::with_capacity(count);
        for (i, line) in lines {
            let vals: Vec<f64> = line.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            match vals[..] {
                [x, y] if x.is_finite() && y.is_finite() => pixels.push(Vec2::new(x, y)),
                _ => return Err(perr(i, "expected `x y`")),
            }
        }
        if pixels.len() != count {
            return Err(perr(0, "pixel count does not match header"));
        }
        Ok(Self(pixels))
    }
}

/// Binary face mask over an image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Whether the pixel centre nearest to `p` is set.
    pub fn contains(&self, p: &Vec2) -> bool {
        let (x, y) = (p.x.round(), p.y.round());
        x >= 0.0
            && y >= 0.0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }
}

/// Sparse row-stochastic m×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CorrespondenceMatrix {
    pub fn new(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, CorrespondenceError> {
        for (r, row) in rows.iter().enumerate() {
            let bad = |msg: String| CorrespondenceError::InvalidRow { row: r, msg };
            if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= n) {
                return Err(bad(format!("column {j} out of range for n = {n}")));
            }
            if row.iter().any(|&(_, w)| !(w >= 0.0) || !w.is_finite()) {
                return Err(bad("weights must be finite and non-negative".into()));
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(bad(format!("row sums to {sum}")));
            }
        }
        Ok(Self { n, rows })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn max_row_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.iter().filter(|(_, w)| *w != 0.0).count()).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows.len(), self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                d[(i, j)] += w;
            }
        }
        d
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("CORR {} {}\n", self.rows.len(), self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i} {}", row.len());
            for &(j, w) in row {
                let _ = write!(out, " {j}:{}", fmt_sig9(w));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, CorrespondenceError> {
        let perr = |line: usize, msg: String| CorrespondenceError::Parse { line, msg };
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or_default().split_whitespace().collect();
        let (m, n) = match header[..] {
            ["CORR", m, n] => (
                m.parse::<usize>().map_err(|_| perr(1, "bad row count".into()))?,
                n.parse::<usize>().map_err(|_| perr(1, "bad column count".into()))?,
            ),
            _ => return Err(perr(1, "expected `CORR m n`".into())),
        };
        let mut rows = Vec::with_capacity(m);
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let mut tok = line.split_whitespace();
            let idx: usize =
                tok.next().and_then(|t| t.parse().ok()).ok_or_else(|| perr(lineno, "bad row index".into()))?;
            if idx != rows.len() {
                return Err(perr(lineno, format!("expected row {}, found {idx}", rows.len())));
            }
            let count: usize =
                tok.next().and_then(|t| t.parse().ok()).ok_or_else(|| perr(lineno, "bad entry count".into()))?;
            let entries: Vec<(usize, f64)> = tok
                .map(|t| {
                    let (j, w) = t.split_once(':')?;
                    Some((j.parse().ok()?, w.parse().ok()?))
                })
                .collect::<Option<_>>()
                .ok_or_else(|| perr(lineno, "bad `idx:weight` entry".into()))?;
            if entries.len() != count {
                return Err(perr(lineno, format!("expected {count} entries, found {}", entries.len())));
            }
            rows.push(entries);
        }
        if rows.len() != m {
            return Err(perr(1, format!("header announces {m} rows, found {}", rows.len())));
        }
        Self::new(n, rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorrespondenceError> {
        write_atomic(path.as_ref(), self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorrespondenceError> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}

/// How barycentric weights on a projected triangle become row weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Raw image-space barycentric weights.
    #[default]
    ScreenSpace,
    /// Weights divided by vertex depth and renormalized.
    PerspectiveCorrect,
}

/// Projected mesh used by the image-space queries.
struct ProjectedMesh<'a> {
    mesh: &'a TriangleMesh,
    pixels: Vec<Vec2>,
    depths: Vec<f64>,
    bboxes: Vec<(Vec2, Vec2)>,
}

impl<'a> ProjectedMesh<'a> {
    fn new(mesh: &'a TriangleMesh, pose: &RigidPose, intr: &CameraIntrinsics) -> Result<Self, GeometryError> {
        let (pixels, depths) = project_perspective(mesh.vertices(), pose, intr)?;
        let bboxes = mesh
            .triangles()
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| pixels[i]);
                (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
            })
            .collect();
        Ok(Self { mesh, pixels, depths, bboxes })
    }

    fn corners(&self, t: usize) -> [Vec2; 3] {
        self.mesh.triangles()[t].map(|i| self.pixels[i])
    }

    /// Front-most triangle containing `p` (ties to the lower index).
    fn locate(&self, p: &Vec2) -> Option<(usize, [f64; 3])> {
        let slack = 1e-6;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (t, (lo, hi)) in self.bboxes.iter().enumerate() {
            if p.x < lo.x - slack || p.x > hi.x + slack || p.y < lo.y - slack || p.y > hi.y + slack {
                continue;
            }
            let [a, b, c] = self.corners(t);
            let Ok(w) = barycentric_coordinates(*p, a, b, c) else { continue };
            if !is_inside(&w) {
                continue;
            }
            let tri = self.mesh.triangles()[t];
            let depth = w[0] * self.depths[tri[0]] + w[1] * self.depths[tri[1]] + w[2] * self.depths[tri[2]];
            if best.is_none_or(|(_, _, d)| depth < d) {
                best = Some((t, w, depth));
            }
        }
        best.map(|(t, w, _)| (t, w))
    }
}

fn clamp_renormalize(w: [f64; 3]) -> [f64; 3] {
    let c = w.map(|x| x.clamp(0.0, 1.0));
    let s: f64 = c.iter().sum();
    c.map(|x| x / s)
}

pub fn build_gt_correspondence(
    mesh: &TriangleMesh,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
    pixels: &PixelSet,
) -> Result<CorrespondenceMatrix, CorrespondenceError> {
    build_gt_correspondence_with(mesh, pose, intr, pixels, WeightMode::ScreenSpace)
}

pub fn build_gt_correspondence_with(
    mesh: &TriangleMesh,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
    pixels: &PixelSet,
    mode: WeightMode,
) -> Result<CorrespondenceMatrix, CorrespondenceError> {
    let proj = ProjectedMesh::new(mesh, pose, intr)?;
    let mut rows = Vec::with_capacity(pixels.len());
    for (i, p) in pixels.as_slice().iter().enumerate() {
        let (t, w) = proj.locate(p).ok_or(CorrespondenceError::PixelOutsideFace(i))?;
        let tri = mesh.triangles()[t];
        let mut w = clamp_renormalize(w);
        if mode == WeightMode::PerspectiveCorrect {
            let scaled = [0, 1, 2].map(|k| w[k] / proj.depths[tri[k]]);
            let s: f64 = scaled.iter().sum();
            w = scaled.map(|x| x / s);
        }
        let row = tri.into_iter().zip(w).filter(|&(_, wk)| wk > 0.0).collect();
        rows.push(row);
    }
    CorrespondenceMatrix::new(mesh.vertex_count(), rows)
}

/// Row-wise convex combinations `M · X`.
pub fn corresponding_points(m: &CorrespondenceMatrix, vertices: &[Vec3]) -> Result<Vec<Vec3>, CorrespondenceError> {
    if m.n() != vertices.len() {
        return Err(CorrespondenceError::DimensionMismatch(format!(
            "matrix has {} columns, shape has {} vertices",
            m.n(),
            vertices.len()
        )));
    }
    Ok(m.rows().iter().map(|row| row.iter().fold(Vec3::zeros(), |acc, &(j, w)| acc + vertices[j] * w)).collect())
}

/// Draws `m` face pixels: without replacement when the mask has at least
/// `m` pixels, otherwise with repetition.
pub fn sample_pixels(mask: &SegmentationMask, m: usize, seed: u64) -> Result<PixelSet, CorrespondenceError> {
    let set: Vec<usize> = mask.data.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
    if set.is_empty() {
        return Err(CorrespondenceError::EmptyMask);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if set.len() >= m {
        index::sample(&mut rng, set.len(), m).into_iter().collect()
    } else {
        (0..m).map(|_| rng.random_range(0..set.len())).collect()
    };
    let w = mask.width;
    Ok(PixelSet(picks.into_iter().map(|k| Vec2::new((set[k] % w) as f64, (set[k] / w) as f64)).collect()))
}

/// Sinusoidal encoding: columns `[0, d/2)` encode x and `[d/2, d)` encode y,
/// each as `(sin, cos)` pairs at frequencies `10000^(-4i/d)`.
pub fn positional_encoding_2d(pixels: &PixelSet, d: usize) -> Result<DMatrix<f64>, CorrespondenceError> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(CorrespondenceError::InvalidDimension(d));
    }
    let quarter = d / 4;
    let freqs: Vec<f64> = (0..quarter).map(|i| 10000f64.powf(-(4.0 * i as f64) / d as f64)).collect();
    let mut out = DMatrix::zeros(pixels.len(), d);
    for (r, p) in pixels.as_slice().iter().enumerate() {
        for (axis, coord) in [p.x, p.y].into_iter().enumerate() {
            for (i, f) in freqs.iter().enumerate() {
                let (s, c) = (coord * f).sin_cos();
                out[(r, axis * d / 2 + 2 * i)] = s;
                out[(r, axis * d / 2 + 2 * i + 1)] = c;
            }
        }
    }
    Ok(out)
}

/// Pixels whose centre lies inside any projected triangle.
pub fn rasterize_segmentation(
    mesh: &TriangleMesh,
    pose: &RigidPose,
    intr: &CameraIntrinsics,
    width: usize,
    height: usize,
) -> Result<SegmentationMask, CorrespondenceError> {
    let mut mask = SegmentationMask::new(width, height);
    if mesh.triangle_count() == 0 {
        return Ok(mask);
    }
    let proj = ProjectedMesh::new(mesh, pose, intr)?;
    for t in 0..mesh.triangle_count() {
        for_each_covered_pixel(proj.corners(t), width, height, 0.0, |x, y, _| mask.data[y * width + x] = true);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat3;

    fn flat_mesh() -> TriangleMesh {
        // two triangles in the z = 0 plane forming a 0.2 m square
        TriangleMesh::new(
            vec![
                Vec3::new(-0.1, -0.1, 0.0),
                Vec3::new(0.1, -0.1, 0.0),
                Vec3::new(0.1, 0.1, 0.0),
                Vec3::new(-0.1, 0.1, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.1), Vec2::new(0.9, 0.9), Vec2::new(0.1, 0.9)],
        )
        .unwrap()
    }

    fn front_pose(tz: f64) -> RigidPose {
        RigidPose { rotation: Mat3::identity(), translation: Vec3::new(0.0, 0.0, tz) }
    }

    #[test]
    fn vertex_pixel_is_one_hot() {
        let intr = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).unwrap();
        // (0.1, 0.1) at depth 0.5 projects to (420, 340): an integer pixel
        let px = PixelSet(vec![Vec2::new(420.0, 340.0)]);
        let m = build_gt_correspondence(&flat_mesh(), &front_pose(0.5), &intr, &px).unwrap();
        assert_eq!(m.row(0), &[(2, 1.0)]);
    }

    #[test]
    fn centroid_of_fronto_parallel_triangle_is_uniform() {
        let mesh = TriangleMesh::new(
            vec![Vec3::new(-0.03, -0.03, 0.0), Vec3::new(0.06, -0.03, 0.0), Vec3::new(-0.03, 0.06, 0.0)],
            vec![[0, 1, 2]],
            vec![Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.1), Vec2::new(0.1, 0.9)],
        )
        .unwrap();
        let intr = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        // projected corners (44,44) (62,44) (44,62): centroid is pixel (50, 50)
        let px = PixelSet(vec![Vec2::new(50.0, 50.0)]);
        let m = build_gt_correspondence(&mesh, &front_pose(0.5), &intr, &px).unwrap();
        for &(_, w) in m.row(0) {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pixel_off_face_is_reported() {
        let intr = CameraIntrinsics::default();
        let px = PixelSet(vec![Vec2::new(640.0, 360.0), Vec2::new(5.0, 5.0)]);
        let err = build_gt_correspondence(&flat_mesh(), &front_pose(0.5), &intr, &px).unwrap_err();
        assert!(matches!(err, CorrespondenceError::PixelOutsideFace(1)));
    }

    #[test]
    fn front_most_triangle_wins() {
        // two parallel triangles, the second nearer to the camera
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(-0.1, -0.1, 0.1),
                Vec3::new(0.1, -0.1, 0.1),
                Vec3::new(0.0, 0.1, 0.1),
                Vec3::new(-0.1, -0.1, 0.0),
                Vec3::new(0.1, -0.1, 0.0),
                Vec3::new(0.0, 0.1, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
            vec![Vec2::new(0.1, 0.1); 6],
        )
        .unwrap();
        let px = PixelSet(vec![Vec2::new(640.0, 360.0)]);
        let m = build_gt_correspondence(&mesh, &front_pose(0.5), &CameraIntrinsics::default(), &px).unwrap();
        assert!(m.row(0).iter().all(|&(j, _)| j >= 3));
    }

    #[test]
    fn perspective_correct_mode_differs_on_slanted_triangles() {
        let mesh = TriangleMesh::new(
            vec![Vec3::new(-0.1, -0.1, -0.05), Vec3::new(0.1, -0.1, 0.1), Vec3::new(0.0, 0.1, 0.0)],
            vec![[0, 1, 2]],
            vec![Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.1), Vec2::new(0.1, 0.9)],
        )
        .unwrap();
        let intr = CameraIntrinsics::default();
        let pose = front_pose(0.4);
        let px = PixelSet(vec![Vec2::new(640.0, 360.0)]);
        let screen = build_gt_correspondence(&mesh, &pose, &intr, &px).unwrap();
        let persp = build_gt_correspondence_with(&mesh, &pose, &intr, &px, WeightMode::PerspectiveCorrect).unwrap();
        assert_ne!(screen, persp);
        // the perspective-correct point lies exactly on the viewing ray
        let x = corresponding_points(&persp, mesh.vertices()).unwrap()[0];
        let (proj, _) = project_perspective(&[x], &pose, &intr).unwrap();
        assert!((proj[0] - px.0[0]).norm() < 1e-9);
    }

    #[test]
    fn corresponding_points_examples() {
        let verts = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.0, 0.5)];
        let m = CorrespondenceMatrix::new(3, vec![vec![(2, 1.0)], vec![(0, 0.5), (1, 0.5)]]).unwrap();
        let pts = corresponding_points(&m, &verts).unwrap();
        assert_eq!(pts[0], verts[2]);
        assert_eq!(pts[1], verts[0]);
        assert!(corresponding_points(&m, &verts[..2]).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert!(CorrespondenceMatrix::new(2, vec![vec![(0, 0.5)]]).is_err());
        assert!(CorrespondenceMatrix::new(2, vec![vec![(2, 1.0)]]).is_err());
        assert!(CorrespondenceMatrix::new(2, vec![vec![(0, 1.5), (1, -0.5)]]).is_err());
        assert!(CorrespondenceMatrix::new(2, vec![vec![(0, 0.3), (1, 0.7)]]).is_ok());
    }

    #[test]
    fn text_format() {
        let m = CorrespondenceMatrix::new(5, vec![vec![(0, 0.25), (4, 0.75)], vec![(3, 1.0)]]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("CORR 2 5\n0 2 0:2.50000000e-1 4:7.50000000e-1\n1 1 3:1.00000000e0\n"));
        assert_eq!(CorrespondenceMatrix::parse_text(&text).unwrap(), m);
        assert!(CorrespondenceMatrix::parse_text("CORR 1 2\n0 1 0:0.5\n").is_err());
        assert!(CorrespondenceMatrix::parse_text("CORR 2 2\n0 1 0:1\n").is_err());
    }

    #[test]
    fn sampling_rules() {
        let mut mask = SegmentationMask::new(4, 4);
        assert!(matches!(sample_pixels(&mask, 10, 0), Err(CorrespondenceError::EmptyMask)));
        mask.data[6] = true;
        let px = sample_pixels(&mask, DEFAULT_PIXEL_COUNT, 1).unwrap();
        assert_eq!(px.len(), 1024);
        assert!(px.as_slice().iter().all(|p| *p == Vec2::new(2.0, 1.0)));

        mask.data.iter_mut().for_each(|b| *b = true);
        let a = sample_pixels(&mask, 10, 42).unwrap();
        assert_eq!(a, sample_pixels(&mask, 10, 42).unwrap());
        let mut seen: Vec<(i64, i64)> = a.as_slice().iter().map(|p| (p.x as i64, p.y as i64)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 10, "no repetition when enough pixels");
    }

    #[test]
    fn positional_encoding_examples() {
        let px = PixelSet(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]);
        let e = positional_encoding_2d(&px, 4).unwrap();
        assert_eq!(e.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(e.row(1).iter().copied().collect::<Vec<_>>(), vec![1f64.sin(), 1f64.cos(), 0.0, 1.0]);
        assert!(matches!(positional_encoding_2d(&px, 6), Err(CorrespondenceError::InvalidDimension(6))));
        assert!(matches!(positional_encoding_2d(&px, 0), Err(CorrespondenceError::InvalidDimension(0))));
    }

    #[test]
    fn positional_encoding_has_no_collisions_on_a_frame() {
        let px = PixelSet((0..192).flat_map(|y| (0..192).map(move |x| Vec2::new(x as f64, y as f64))).collect());
        let e = positional_encoding_2d(&px, 16).unwrap();
        assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
        let mut keys: Vec<Vec<u64>> = e.row_iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 192 * 192);
    }

    #[test]
    fn segmentation_examples() {
        let intr = CameraIntrinsics::new(100.0, 100.0, 5.0, 5.0).unwrap();
        let empty = rasterize_segmentation(&TriangleMesh::empty(), &front_pose(1.0), &intr, 10, 10).unwrap();
        assert_eq!(empty.count(), 0);
        let big = TriangleMesh::new(
            vec![Vec3::new(-10.0, -10.0, 0.0), Vec3::new(30.0, -10.0, 0.0), Vec3::new(-10.0, 30.0, 0.0)],
            vec![[0, 1, 2]],
            vec![Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.1), Vec2::new(0.1, 0.9)],
        )
        .unwrap();
        let full = rasterize_segmentation(&big, &front_pose(1.0), &intr, 10, 10).unwrap();
        assert_eq!(full.count(), 100);
    }
}
