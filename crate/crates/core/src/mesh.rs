//! Triangle meshes with per-vertex UV coordinates and a strict Wavefront OBJ
//! subset (`v`, `vt`, `f a/a b/b c/c`, `#` comments).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Vec2, Vec3};
use crate::io::write_atomic;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    uv_coords: Vec<Vec2>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, uv_coords: Vec<Vec2>) -> Result<Self, MeshError> {
        let mesh = Self { vertices, triangles, uv_coords };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new(), triangles: Vec::new(), uv_coords: Vec::new() }
    }

    fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len();
        if self.uv_coords.len() != n {
            return Err(MeshError::InvariantViolation(format!(
                "{} uv coordinates for {} vertices",
                self.uv_coords.len(),
                n
            )));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(MeshError::InvariantViolation(format!("vertex {i} is not finite")));
        }
        if let Some(i) = self.uv_coords.iter().position(|uv| !(0.0..1.0).contains(&uv.x) || !(0.0..1.0).contains(&uv.y))
        {
            return Err(MeshError::InvariantViolation(format!("uv {i} outside [0,1)^2")));
        }
        let mut seen = HashSet::with_capacity(self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(MeshError::InvariantViolation(format!("triangle {t} indexes past {n} vertices")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::InvariantViolation(format!("triangle {t} repeats a vertex")));
            }
            if !seen.insert(*tri) {
                return Err(MeshError::InvariantViolation(format!("triangle {t} is a duplicate")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn uv_coords(&self) -> &[Vec2] {
        &self.uv_coords
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Same topology and UVs with replaced vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self, MeshError> {
        Self::new(vertices, self.triangles.clone(), self.uv_coords.clone())
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.vertices.len() * 2 + self.triangles.len()));
        let _ = writeln!(out, "# {} vertices, {} triangles", self.vertices.len(), self.triangles.len());
        // `{:?}` is the shortest representation that parses back to the same f64
        for v in &self.vertices {
            let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for uv in &self.uv_coords {
            let _ = writeln!(out, "vt {:?} {:?}", uv.x, uv.y);
        }
        for t in &self.triangles {
            let (a, b, c) = (t[0] + 1, t[1] + 1, t[2] + 1);
            let _ = writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}");
        }
        out
    }

    pub fn parse_obj(text: &str) -> Result<Self, MeshError> {
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let err = |msg: String| MeshError::Parse { line, msg };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let directive = tokens.next().unwrap_or_default();
            let args: Vec<&str> = tokens.collect();
            match directive {
                "v" => {
                    let c = parse_reals(&args, 3).map_err(err)?;
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                "vt" => {
                    let c = parse_reals(&args, 2).map_err(err)?;
                    uvs.push(Vec2::new(c[0], c[1]));
                }
                "f" => {
                    if args.len() != 3 {
                        return Err(err(format!("face needs 3 corners, got {}", args.len())));
                    }
                    let mut tri = [0usize; 3];
                    for (slot, corner) in tri.iter_mut().zip(&args) {
                        *slot = parse_corner(corner).map_err(err)?;
                    }
                    triangles.push(tri);
                }
                other => return Err(err(format!("unsupported directive `{other}`"))),
            }
        }
        if uvs.len() != vertices.len() {
            return Err(MeshError::Parse {
                line: text.lines().count(),
                msg: format!("{} vt lines for {} vertices", uvs.len(), vertices.len()),
            });
        }
        Self::new(vertices, triangles, uvs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::parse_obj(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        write_atomic(path.as_ref(), self.to_obj_string().as_bytes())?;
        Ok(())
    }
}

fn parse_reals(args: &[&str], n: usize) -> Result<Vec<f64>, String> {
    if args.len() != n {
        return Err(format!("expected {n} values, got {}", args.len()));
    }
    args.iter()
        .map(|a| match a.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("bad number `{a}`")),
        })
        .collect()
}

/// `a/a` with 1-based indices; vertex and uv index must agree.
fn parse_corner(corner: &str) -> Result<usize, String> {
    let mut parts = corner.split('/');
    let (Some(v), Some(t), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("face corner `{corner}` must be `v/vt`"));
    };
    let v: usize = v.parse().map_err(|_| format!("bad vertex index `{v}`"))?;
    let t: usize = t.parse().map_err(|_| format!("bad uv index `{t}`"))?;
    if v == 0 || t == 0 {
        return Err("indices are 1-based".to_string());
    }
    if v != t {
        return Err(format!("vertex index {v} differs from uv index {t}"));
    }
    Ok(v - 1)
}
