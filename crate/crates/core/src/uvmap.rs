//! Canonical-space UV position maps: rasterize a mesh's vertex positions into
//! UV space and read vertices back out.
//!
//! UV `(u, v)` lands in pixel `(floor(u·W), floor(v·H))`, origin top-left with
//! `v` growing downward. Triangle coverage is sampled at pixel centres.
//! After rasterization every vertex is written verbatim into its own pixel,
//! which makes [`extract_vertices`] an exact inverse of
//! [`render_uv_position_map`] for meshes whose vertices quantize to distinct
//! pixels.

use thiserror::Error;

use crate::geometry::{Vec2, Vec3};
use crate::mesh::TriangleMesh;
use crate::raster::for_each_covered_pixel;

/// Edge length of the position maps the face model regresses.
pub const DEFAULT_UV_SIZE: usize = 192;

/// Values written to one pixel by two triangles that differ by more than
/// this are reported as overlap.
pub const OVERLAP_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UvMapError {
    #[error("map must be at least 2x2, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("uv coordinate {0} outside [0,1)^2")]
    UvOutOfRange(usize),
    #[error("uv coordinate {0} falls on a pixel with zero weight")]
    InvalidPixel(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid map: {0}")]
    InvariantViolation(String),
}

/// H×W×3 raster of canonical positions (meters) plus its binary weight mask.
#[derive(Debug, Clone, PartialEq)]
pub struct UvPositionMap {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
    weight: Vec<bool>,
}

impl UvPositionMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![[0.0; 3]; width * height], weight: vec![false; width * height] }
    }

    /// Builds a map from row-major raw parts, checking the weight/data
    /// invariants.
    pub fn from_parts(width: usize, height: usize, data: Vec<[f64; 3]>, weight: Vec<bool>) -> Result<Self, UvMapError> {
        if data.len() != width * height || weight.len() != width * height {
            return Err(UvMapError::DimensionMismatch(format!(
                "{}x{} map with {} data and {} weight entries",
                width,
                height,
                data.len(),
                weight.len()
            )));
        }
        for (i, (d, &w)) in data.iter().zip(&weight).enumerate() {
            if w && !d.iter().all(|c| c.is_finite()) {
                return Err(UvMapError::InvariantViolation(format!("non-finite value at valid pixel {i}")));
            }
            if !w && d.iter().any(|&c| c != 0.0) {
                return Err(UvMapError::InvariantViolation(format!("nonzero value at masked pixel {i}")));
            }
        }
        Ok(Self { width, height, data, weight })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[self.index(x, y)]
    }

    pub fn weight_at(&self, x: usize, y: usize) -> bool {
        self.weight[self.index(x, y)]
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn weights(&self) -> &[bool] {
        &self.weight
    }

    /// Sets a pixel and its weight together, keeping the invariants.
    pub fn set(&mut self, x: usize, y: usize, value: Option<[f64; 3]>) {
        let i = self.index(x, y);
        match value {
            Some(v) => {
                self.data[i] = v;
                self.weight[i] = true;
            }
            None => {
                self.data[i] = [0.0; 3];
                self.weight[i] = false;
            }
        }
    }

    pub fn valid_pixel_count(&self) -> usize {
        self.weight.iter().filter(|&&w| w).count()
    }

    /// Pixel holding UV coordinate `uv`.
    pub fn pixel_of(&self, uv: &Vec2) -> (usize, usize) {
        quantize_uv(uv, self.width, self.height)
    }
}

pub fn quantize_uv(uv: &Vec2, width: usize, height: usize) -> (usize, usize) {
    let q = |t: f64, n: usize| ((t * n as f64).floor().max(0.0) as usize).min(n - 1);
    (q(uv.x, width), q(uv.y, height))
}

/// Non-fatal findings from rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum RenderWarning {
    /// Two triangles disagree at a pixel; the later one won.
    UvOverlap { x: usize, y: usize, triangle: usize, previous: usize },
    /// Two vertices quantize to the same pixel; the later one won.
    VertexCollision { x: usize, y: usize, vertex: usize, previous: usize },
}

#[derive(Debug, Clone)]
pub struct RenderedUvMap {
    pub map: UvPositionMap,
    pub warnings: Vec<RenderWarning>,
}

pub fn render_uv_position_map(mesh: &TriangleMesh, height: usize, width: usize) -> Result<RenderedUvMap, UvMapError> {
    if width < 2 || height < 2 {
        return Err(UvMapError::TooSmall { width, height });
    }
    let uvs = mesh.uv_coords();
    if let Some(i) = uvs.iter().position(|uv| !(0.0..1.0).contains(&uv.x) || !(0.0..1.0).contains(&uv.y)) {
        return Err(UvMapError::UvOutOfRange(i));
    }
    let verts = mesh.vertices();
    let scale = Vec2::new(width as f64, height as f64);
    let mut map = UvPositionMap::zeros(width, height);
    let mut owner: Vec<Option<usize>> = vec![None; width * height];
    let mut warnings = Vec::new();

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = tri.map(|i| uvs[i].component_mul(&scale));
        let [p0, p1, p2] = tri.map(|i| verts[i]);
        for_each_covered_pixel(corners, width, height, 0.5, |x, y, w| {
            let value = p0 * w[0] + p1 * w[1] + p2 * w[2];
            let value = [value.x, value.y, value.z];
            let i = y * width + x;
            if let Some(prev) = owner[i] {
                let old = map.data[i];
                if (0..3).any(|c| (old[c] - value[c]).abs() > OVERLAP_TOLERANCE) {
                    warnings.push(RenderWarning::UvOverlap { x, y, triangle: t, previous: prev });
                }
            }
            owner[i] = Some(t);
            map.data[i] = value;
            map.weight[i] = true;
        });
    }

    let mut splatted: Vec<Option<usize>> = vec![None; width * height];
    for (v, (uv, p)) in uvs.iter().zip(verts).enumerate() {
        let (x, y) = quantize_uv(uv, width, height);
        let i = y * width + x;
        if let Some(previous) = splatted[i] {
            warnings.push(RenderWarning::VertexCollision { x, y, vertex: v, previous });
        }
        splatted[i] = Some(v);
        map.data[i] = [p.x, p.y, p.z];
        map.weight[i] = true;
    }

    for w in &warnings {
        log::warn!("uv render: {w:?}");
    }
    Ok(RenderedUvMap { map, warnings })
}

/// Reads the vertex at each UV coordinate's pixel.
pub fn extract_vertices(map: &UvPositionMap, uv_coords: &[Vec2]) -> Result<Vec<Vec3>, UvMapError> {
    uv_coords
        .iter()
        .enumerate()
        .map(|(i, uv)| {
            if !(0.0..1.0).contains(&uv.x) || !(0.0..1.0).contains(&uv.y) {
                return Err(UvMapError::UvOutOfRange(i));
            }
            let (x, y) = map.pixel_of(uv);
            if !map.weight_at(x, y) {
                return Err(UvMapError::InvalidPixel(i));
            }
            let d = map.get(x, y);
            Ok(Vec3::new(d[0], d[1], d[2]))
        })
        .collect()
}
