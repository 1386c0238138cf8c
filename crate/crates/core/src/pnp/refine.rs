use nalgebra::{Matrix6, Vector6};

use super::PnpProblem;
use crate::geometry::{project_to_so3, so3_exp, RigidPose, Vec3, MIN_DEPTH};

const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStatus {
    /// No step reduced the error further.
    Converged,
    /// Ran the requested number of iterations.
    IterationLimit,
    /// Normal equations were singular; the input pose is returned as is.
    SingularNormalEquations,
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub pose: RigidPose,
    pub status: RefineStatus,
    /// Reprojection RMSE before the first and after each accepted iteration.
    pub rmse_history: Vec<f64>,
}

fn cost(pose: &RigidPose, p: &PnpProblem) -> f64 {
    let intr = p.intrinsics();
    let mut total = 0.0;
    for (x, v) in p.world().iter().zip(p.pixels()) {
        let pc = pose.transform(x);
        if pc.z <= MIN_DEPTH {
            return f64::INFINITY;
        }
        total += (intr.project(&pc) - v).norm_squared();
    }
    total
}

fn apply(pose: &RigidPose, step: &Vector6<f64>) -> RigidPose {
    let omega = Vec3::new(step[0], step[1], step[2]);
    RigidPose {
        rotation: project_to_so3(&(so3_exp(&omega) * pose.rotation)),
        translation: pose.translation + Vec3::new(step[3], step[4], step[5]),
    }
}

/// Gauss-Newton on the summed squared reprojection error, parameterized by a
/// left axis-angle increment and a translation increment. A step is only
/// taken if it lowers the cost, halving it up to eight times.
pub fn refine_pose(pose: &RigidPose, p: &PnpProblem, iters: usize) -> Refinement {
    let intr = p.intrinsics();
    let m = p.len() as f64;
    let mut current = *pose;
    let mut current_cost = cost(&current, p);
    let mut history = vec![(current_cost / m).sqrt()];
    let mut status = RefineStatus::IterationLimit;
    for _ in 0..iters {
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for (x, v) in p.world().iter().zip(p.pixels()) {
            let rx = current.rotation * x;
            let pc = rx + current.translation;
            let (iz, iz2) = (1.0 / pc.z, 1.0 / (pc.z * pc.z));
            let du = [intr.fx * iz, 0.0, -intr.fx * pc.x * iz2];
            let dv = [0.0, intr.fy * iz, -intr.fy * pc.y * iz2];
            let r = intr.project(&pc) - v;
            // d(pc)/d(omega) = -[R x]_x
            let skew = [[0.0, rx.z, -rx.y], [-rx.z, 0.0, rx.x], [rx.y, -rx.x, 0.0]];
            for (row, res) in [(du, r.x), (dv, r.y)] {
                let mut j = Vector6::<f64>::zeros();
                for c in 0..3 {
                    j[c] = (0..3).map(|k| row[k] * skew[k][c]).sum();
                    j[3 + c] = row[c];
                }
                jtj += j * j.transpose();
                jtr += j * res;
            }
        }
        let svd = jtj.svd(false, false);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        let Some(chol) = jtj.cholesky().filter(|_| smin > 1e-14 * smax && smax.is_finite()) else {
            return Refinement { pose: *pose, status: RefineStatus::SingularNormalEquations, rmse_history: history };
        };
        let delta = -chol.solve(&jtr);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = apply(&current, &(delta * scale));
            let c = cost(&candidate, p);
            if c < current_cost {
                accepted = Some((candidate, c));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, c)) = accepted else {
            status = RefineStatus::Converged;
            break;
        };
        current = next;
        current_cost = c;
        history.push((c / m).sqrt());
    }
    Refinement { pose: current, status, rmse_history: history }
}
