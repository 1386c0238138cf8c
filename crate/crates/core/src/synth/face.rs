use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SynthError;
use crate::geometry::{Vec2, Vec3};
use crate::mesh::TriangleMesh;

/// Vertex count of the reference face topology.
pub const DEFAULT_FACE_VERTICES: usize = 1220;

const HALF_WIDTH: f64 = 0.07;
const HALF_HEIGHT: f64 = 0.09;
const DEPTH: f64 = 0.08;
/// Angular half-extent of the ellipsoid patch.
const SPAN: f64 = 0.4 * PI;
const UV_MARGIN: f64 = 0.05;
const BUMPS: usize = 4;
const BUMP_AMPLITUDE: f64 = 0.03;

/// Grid layout reaching an exact vertex count: an `rows × cols` lattice plus
/// `centres` quads that get an extra midpoint vertex (and so four triangles
/// instead of two).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceGrid {
    pub rows: usize,
    pub cols: usize,
    pub centres: usize,
}

impl FaceGrid {
    pub fn for_vertex_count(n: usize) -> Result<Self, SynthError> {
        if n < 4 {
            return Err(SynthError::InvalidCount { requested: n, nearest: 4 });
        }
        let rows = (n as f64).sqrt().floor() as usize;
        let cols = n / rows;
        let centres = n - rows * cols;
        debug_assert!(centres <= (rows - 1) * (cols - 1));
        Ok(Self { rows, cols, centres })
    }

    pub fn vertex_count(&self) -> usize {
        self.rows * self.cols + self.centres
    }

    pub fn triangle_count(&self) -> usize {
        2 * (self.rows - 1) * (self.cols - 1) + 2 * self.centres
    }

    fn quad_count(&self) -> usize {
        (self.rows - 1) * (self.cols - 1)
    }

    /// Quads that get a centre vertex, spread evenly over the grid.
    fn refined(&self) -> Vec<bool> {
        let q = self.quad_count();
        let mut out = vec![false; q];
        for i in 0..self.centres {
            out[((i as f64 + 0.5) * q as f64 / self.centres as f64) as usize] = true;
        }
        out
    }
}

/// Smooth radial modulation: a few seeded low-frequency product-of-sines bumps.
struct Relief {
    bumps: Vec<[f64; 5]>,
}

impl Relief {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..BUMPS)
            .map(|_| {
                [
                    rng.random_range(-BUMP_AMPLITUDE..BUMP_AMPLITUDE),
                    rng.random_range(1.0..3.0) * PI,
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(1.0..3.0) * PI,
                    rng.random_range(0.0..2.0 * PI),
                ]
            })
            .collect();
        Self { bumps }
    }

    fn at(&self, s: f64, t: f64) -> f64 {
        1.0 + self.bumps.iter().map(|[a, fs, ps, ft, pt]| a * (fs * s + ps).sin() * (ft * t + pt).sin()).sum::<f64>()
    }
}

fn to_f32(x: f64) -> f64 {
    x as f32 as f64
}

/// Surface point at grid parameters `(s, t) ∈ [0,1]²`; `t` runs top to
/// bottom, the middle of the patch faces the camera (−z).
fn surface(relief: &Relief, s: f64, t: f64) -> Vec3 {
    let phi = (s - 0.5) * 2.0 * SPAN;
    let psi = (t - 0.5) * 2.0 * SPAN;
    let r = relief.at(s, t);
    let (a, b) = (HALF_WIDTH / SPAN.sin(), HALF_HEIGHT / SPAN.sin());
    let c = DEPTH / (1.0 - SPAN.cos() * SPAN.cos());
    let p = Vec3::new(a * phi.sin() * psi.cos(), b * psi.sin(), -c * phi.cos() * psi.cos() + 0.5 * c);
    // coordinates are kept f32-representable so single-precision files
    // reproduce them exactly
    (p * r).map(to_f32)
}

fn uv(s: f64, t: f64) -> Vec2 {
    Vec2::new(UV_MARGIN + (1.0 - 2.0 * UV_MARGIN) * s, UV_MARGIN + (1.0 - 2.0 * UV_MARGIN) * t)
}

/// Deterministic face-like open surface with exactly `n_vertices` vertices.
/// At the default count it has 2304 triangles.
pub fn make_synthetic_face(seed: u64, n_vertices: usize) -> Result<TriangleMesh, SynthError> {
    let grid = FaceGrid::for_vertex_count(n_vertices)?;
    let relief = Relief::new(seed);
    let (rows, cols) = (grid.rows, grid.cols);
    let param = |i: usize, j: usize| (j as f64 / (cols - 1) as f64, i as f64 / (rows - 1) as f64);

    let mut vertices = Vec::with_capacity(grid.vertex_count());
    let mut uvs = Vec::with_capacity(grid.vertex_count());
    for i in 0..rows {
        for j in 0..cols {
            let (s, t) = param(i, j);
            vertices.push(surface(&relief, s, t));
            uvs.push(uv(s, t));
        }
    }
    let mut triangles = Vec::with_capacity(grid.triangle_count());
    for (q, refine) in grid.refined().into_iter().enumerate() {
        let (i, j) = (q / (cols - 1), q % (cols - 1));
        let [a, b, c, d] = [i * cols + j, i * cols + j + 1, (i + 1) * cols + j + 1, (i + 1) * cols + j];
        if refine {
            let (s0, t0) = param(i, j);
            let (s1, t1) = param(i + 1, j + 1);
            let (s, t) = (0.5 * (s0 + s1), 0.5 * (t0 + t1));
            let m = vertices.len();
            vertices.push(surface(&relief, s, t));
            uvs.push(uv(s, t));
            triangles.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
        } else {
            triangles.extend([[a, b, c], [a, c, d]]);
        }
    }
    Ok(TriangleMesh::new(vertices, triangles, uvs)?)
}
