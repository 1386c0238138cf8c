use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Vector3};

use super::{PnpError, PnpProblem, PrincipalAxes};
use crate::geometry::{project_to_so3, RigidPose};

pub const DLT_MIN_POINTS: usize = 6;

/// Direct linear transform: solve the 3×4 projection matrix from the
/// homogeneous system on normalized image coordinates, then factor out the
/// scale and project the left block onto SO(3). Needs non-planar points.
pub fn solve_dlt(problem: &PnpProblem) -> Result<RigidPose, PnpError> {
    let m = problem.len();
    if m < DLT_MIN_POINTS {
        return Err(PnpError::TooFewPoints { needed: DLT_MIN_POINTS, got: m });
    }
    let pa = PrincipalAxes::of(problem.world());
    if pa.is_degenerate() || pa.is_planar() {
        return Err(PnpError::DegenerateGeometry("DLT needs non-planar world points"));
    }
    // similarity normalization of the world points
    let scale = (pa.values.iter().sum::<f64>()).sqrt();
    let c = pa.centroid;
    let intr = problem.intrinsics();

    let mut a = DMatrix::<f64>::zeros(2 * m, 12);
    for (i, (x, px)) in problem.world().iter().zip(problem.pixels()).enumerate() {
        let xn = (x - c) / scale;
        let h = [xn.x, xn.y, xn.z, 1.0];
        let u = intr.normalize(px);
        for k in 0..4 {
            a[(2 * i, k)] = h[k];
            a[(2 * i, 8 + k)] = -u.x * h[k];
            a[(2 * i + 1, 4 + k)] = h[k];
            a[(2 * i + 1, 8 + k)] = -u.y * h[k];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(PnpError::DegenerateGeometry("svd failed"))?;
    let (imin, _) = svd.singular_values.argmin();
    let row: Vec<f64> = v_t.row(imin).iter().copied().collect();
    let pn = Matrix3x4::from_row_slice(&row);

    // undo the normalization: P = P' · N
    let mut norm = Matrix4::<f64>::identity() / scale;
    norm[(3, 3)] = 1.0;
    norm.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-c / scale));
    let mut proj = pn * norm;

    let mut left: Matrix3<f64> = proj.fixed_view::<3, 3>(0, 0).into_owned();
    if left.determinant() < 0.0 {
        proj = -proj;
        left = -left;
    }
    let sv = left.svd(false, false).singular_values;
    let s = sv.sum() / 3.0;
    if !(s > 0.0) {
        return Err(PnpError::DegenerateGeometry("projection matrix has no rotation part"));
    }
    let rotation = project_to_so3(&(left / s));
    let translation: Vector3<f64> = proj.column(3).into_owned() / s;
    let pose = RigidPose { rotation, translation };
    let behind = problem.world().iter().filter(|x| pose.transform(x).z <= 0.0).count();
    if 2 * behind >= m {
        return Err(PnpError::BehindCamera { behind, total: m });
    }
    Ok(pose)
}
