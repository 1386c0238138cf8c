//! Barycentric coordinates and the pixel-centre coverage rule shared by the
//! UV renderer and the image-space rasterizers.

use thiserror::Error;

use crate::geometry::Vec2;

/// Triangles with |signed area| at or below this (px²) are degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Slack on barycentric weights when deciding containment.
pub const INSIDE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("degenerate triangle (|area| <= {MIN_TRIANGLE_AREA})")]
pub struct DegenerateTriangle;

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Weights `(w_a, w_b, w_c)` with `p = w_a·a + w_b·b + w_c·c` and
/// `w_a = 1 − w_b − w_c`.
pub fn barycentric_coordinates(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> Result<[f64; 3], DegenerateTriangle> {
    let ab = b - a;
    let ac = c - a;
    let det = cross(ab, ac);
    if !(det.abs() > MIN_TRIANGLE_AREA) {
        return Err(DegenerateTriangle);
    }
    let ap = p - a;
    let wb = cross(ap, ac) / det;
    let wc = cross(ab, ap) / det;
    Ok([1.0 - wb - wc, wb, wc])
}

#[inline]
pub fn is_inside(w: &[f64; 3]) -> bool {
    w.iter().all(|&x| x >= -INSIDE_TOLERANCE)
}

/// Visits every pixel `(x, y)` of a `width × height` grid whose sample point
/// `(x + offset, y + offset)` lies inside or on the triangle, passing the
/// barycentric weights. Degenerate triangles visit nothing.
pub fn for_each_covered_pixel(
    tri: [Vec2; 3],
    width: usize,
    height: usize,
    offset: f64,
    mut visit: impl FnMut(usize, usize, [f64; 3]),
) {
    if width == 0 || height == 0 || barycentric_coordinates(tri[0], tri[0], tri[1], tri[2]).is_err() {
        return;
    }
    let min = tri.iter().fold(Vec2::repeat(f64::INFINITY), |m, p| m.inf(p));
    let max = tri.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    let slack = 1e-6;
    let lo = |v: f64| (v - offset - slack).ceil().max(0.0);
    let hi = |v: f64, n: usize| (v - offset + slack).floor().min(n as f64 - 1.0);
    let (x0, x1) = (lo(min.x), hi(max.x, width));
    let (y0, y1) = (lo(min.y), hi(max.y, height));
    if !(x0 <= x1 && y0 <= y1) {
        return;
    }
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            let p = Vec2::new(x as f64 + offset, y as f64 + offset);
            if let Ok(w) = barycentric_coordinates(p, tri[0], tri[1], tri[2]) {
                if is_inside(&w) {
                    visit(x, y, w);
                }
            }
        }
    }
}
