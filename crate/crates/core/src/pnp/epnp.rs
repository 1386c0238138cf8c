//! EPnP: express every world point as an affine combination of a few control
//! points, recover the control points in the camera frame from the null space
//! of the projection constraints, then align rigidly.

use nalgebra::{DMatrix, DVector};

use super::{align_rigid, PnpError, PnpProblem, PrincipalAxes};
use crate::geometry::{RigidPose, Vec3};

const GAUSS_NEWTON_ITERS: usize = 10;

struct ControlFrame {
    /// Control points in world coordinates (centroid first).
    points: Vec<Vec3>,
    /// Per world point, its weights on the control points (sum to 1).
    alphas: Vec<Vec<f64>>,
}

impl ControlFrame {
    fn new(world: &[Vec3]) -> Result<Self, PnpError> {
        let pa = PrincipalAxes::of(world);
        if pa.is_degenerate() {
            return Err(PnpError::DegenerateGeometry("world points are collinear or coincident"));
        }
        let axes = if pa.is_planar() { 2 } else { 3 };
        let scales: Vec<f64> = pa.values[..axes].iter().map(|v| v.sqrt()).collect();
        let mut points = vec![pa.centroid];
        points.extend((0..axes).map(|k| pa.centroid + pa.axes[k] * scales[k]));
        // axes are orthonormal, so the weights are plain projections
        let alphas = world
            .iter()
            .map(|x| {
                let d = x - pa.centroid;
                let mut a = vec![0.0; axes + 1];
                for k in 0..axes {
                    a[k + 1] = d.dot(&pa.axes[k]) / scales[k];
                }
                a[0] = 1.0 - a[1..].iter().sum::<f64>();
                a
            })
            .collect();
        Ok(Self { points, alphas })
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
    }
}

fn control_points(v: &DVector<f64>, count: usize) -> Vec<Vec3> {
    (0..count).map(|j| Vec3::new(v[3 * j], v[3 * j + 1], v[3 * j + 2])).collect()
}

/// Differences of control-point blocks of a kernel vector for each pair.
fn pair_diffs(v: &DVector<f64>, pairs: &[(usize, usize)]) -> Vec<Vec3> {
    pairs
        .iter()
        .map(|&(a, b)| Vec3::new(v[3 * a] - v[3 * b], v[3 * a + 1] - v[3 * b + 1], v[3 * a + 2] - v[3 * b + 2]))
        .collect()
}

/// Least-squares solve, `None` when rank deficient.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let x = svd.solve(b, smax * 1e-12).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Solver<'a> {
    problem: &'a PnpProblem,
    frame: ControlFrame,
    /// Null-space basis, smallest eigenvalue first.
    kernel: Vec<DVector<f64>>,
    /// Kernel vectors' control-point differences per pair.
    diffs: Vec<Vec<Vec3>>,
    /// Squared world distances per pair.
    dist2: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a PnpProblem) -> Result<Self, PnpError> {
        let frame = ControlFrame::new(problem.world())?;
        let nc = frame.len();
        let dim = 3 * nc;
        let intr = problem.intrinsics();
        let mut mtm = DMatrix::<f64>::zeros(dim, dim);
        let mut r1 = vec![0.0; dim];
        let mut r2 = vec![0.0; dim];
        for (alpha, px) in frame.alphas.iter().zip(problem.pixels()) {
            let u = intr.normalize(px);
            for j in 0..nc {
                r1[3 * j] = alpha[j];
                r1[3 * j + 1] = 0.0;
                r1[3 * j + 2] = -alpha[j] * u.x;
                r2[3 * j] = 0.0;
                r2[3 * j + 1] = alpha[j];
                r2[3 * j + 2] = -alpha[j] * u.y;
            }
            for a in 0..dim {
                for b in a..dim {
                    mtm[(a, b)] += r1[a] * r1[b] + r2[a] * r2[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                mtm[(a, b)] = mtm[(b, a)];
            }
        }
        let eig = mtm.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kdim = if nc == 4 { 4 } else { 3 };
        let kernel: Vec<DVector<f64>> =
            order[..kdim].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        let pairs = frame.pairs();
        let diffs = kernel.iter().map(|v| pair_diffs(v, &pairs)).collect();
        let dist2 = pairs.iter().map(|&(a, b)| (frame.points[a] - frame.points[b]).norm_squared()).collect();
        Ok(Self { problem, frame, kernel, diffs, dist2 })
    }

    fn pair_count(&self) -> usize {
        self.dist2.len()
    }

    /// Single kernel vector scaled to match the world distances.
    fn betas_n1(&self) -> Option<Vec<f64>> {
        let (mut num, mut den) = (0.0, 0.0);
        for (d, w2) in self.diffs[0].iter().zip(&self.dist2) {
            num += d.norm() * w2.sqrt();
            den += d.norm_squared();
        }
        (den > 0.0).then(|| {
            let mut b = vec![0.0; self.kernel.len()];
            b[0] = num / den;
            b
        })
    }

    /// Linearized solve for products βᵢβⱼ over the first `n` kernel vectors.
    fn betas_linearized(&self, n: usize) -> Option<Vec<f64>> {
        let terms: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        if terms.len() > self.pair_count() {
            return None;
        }
        let mut l = DMatrix::zeros(self.pair_count(), terms.len());
        for p in 0..self.pair_count() {
            for (c, &(i, j)) in terms.iter().enumerate() {
                let f = if i == j { 1.0 } else { 2.0 };
                l[(p, c)] = f * self.diffs[i][p].dot(&self.diffs[j][p]);
            }
        }
        let rho = DVector::from_column_slice(&self.dist2);
        let prod = lstsq(&l, &rho)?;
        let at = |i: usize, j: usize| prod[terms.iter().position(|&t| t == (i, j)).unwrap()];
        let b0 = at(0, 0).abs().sqrt();
        if b0 == 0.0 {
            return None;
        }
        let mut b = vec![0.0; self.kernel.len()];
        b[0] = b0;
        for (k, slot) in b.iter_mut().enumerate().take(n).skip(1) {
            *slot = at(0, k).signum() * at(k, k).abs().sqrt();
        }
        Some(b)
    }

    /// Gauss-Newton on all kernel coefficients against the pairwise
    /// distance constraints.
    fn polish(&self, mut betas: Vec<f64>) -> Vec<f64> {
        let k = betas.len();
        let p = self.pair_count();
        for _ in 0..GAUSS_NEWTON_ITERS {
            let mut jac = DMatrix::zeros(p, k);
            let mut res = DVector::zeros(p);
            for q in 0..p {
                let d: Vec3 = (0..k).fold(Vec3::zeros(), |acc, i| acc + self.diffs[i][q] * betas[i]);
                res[q] = d.norm_squared() - self.dist2[q];
                for i in 0..k {
                    jac[(q, i)] = 2.0 * d.dot(&self.diffs[i][q]);
                }
            }
            let Some(step) = lstsq(&jac, &res) else { break };
            for i in 0..k {
                betas[i] -= step[i];
            }
            if step.norm() <= 1e-15 * (1.0 + betas.iter().map(|b| b * b).sum::<f64>().sqrt()) {
                break;
            }
        }
        betas
    }

    fn pose_from_betas(&self, betas: &[f64]) -> Option<(RigidPose, f64)> {
        let nc = self.frame.len();
        let mut v = DVector::zeros(3 * nc);
        for (b, k) in betas.iter().zip(&self.kernel) {
            v += k * *b;
        }
        let mut ctrl = control_points(&v, nc);
        let mean_depth = ctrl.iter().map(|c| c.z).sum::<f64>() / nc as f64;
        if mean_depth < 0.0 {
            ctrl.iter_mut().for_each(|c| *c = -*c);
        }
        let camera: Vec<Vec3> = self
            .frame
            .alphas
            .iter()
            .map(|a| a.iter().zip(&ctrl).fold(Vec3::zeros(), |acc, (w, c)| acc + c * *w))
            .collect();
        if !camera.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return None;
        }
        let pose = align_rigid(self.problem.world(), &camera);
        let err = self.problem.reprojection_errors(&pose);
        let mean = err.iter().sum::<f64>() / err.len() as f64;
        Some((pose, if mean.is_nan() { f64::INFINITY } else { mean }))
    }
}

/// Minimal-case fallback: solve the per-point depths directly from the
/// pairwise distance constraints, starting from a fronto-parallel guess.
/// Only used when the kernel is too wide for the β-cases (m = 4).
fn depth_candidate(problem: &PnpProblem) -> Option<(RigidPose, f64)> {
    let intr = problem.intrinsics();
    let world = problem.world();
    let m = world.len();
    let rays: Vec<Vec3> = problem
        .pixels()
        .iter()
        .map(|px| {
            let u = intr.normalize(px);
            Vec3::new(u.x, u.y, 1.0)
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let (mut dw, mut dr) = (0.0, 0.0);
    for &(a, b) in &pairs {
        dw += (world[a] - world[b]).norm();
        dr += (rays[a] - rays[b]).norm();
    }
    if !(dr > 0.0) {
        return None;
    }
    let mut depth = DVector::from_element(m, dw / dr);
    for _ in 0..50 {
        let mut jac = DMatrix::zeros(pairs.len(), m);
        let mut res = DVector::zeros(pairs.len());
        for (q, &(a, b)) in pairs.iter().enumerate() {
            let d = rays[a] * depth[a] - rays[b] * depth[b];
            res[q] = d.norm_squared() - (world[a] - world[b]).norm_squared();
            jac[(q, a)] = 2.0 * d.dot(&rays[a]);
            jac[(q, b)] = -2.0 * d.dot(&rays[b]);
        }
        let step = lstsq(&jac, &res)?;
        depth -= &step;
        if step.norm() <= 1e-15 * depth.norm() {
            break;
        }
    }
    let camera: Vec<Vec3> = rays.iter().zip(depth.iter()).map(|(r, z)| r * *z).collect();
    let pose = align_rigid(world, &camera);
    let err = problem.reprojection_errors(&pose);
    let mean = err.iter().sum::<f64>() / m as f64;
    mean.is_finite().then_some((pose, mean))
}

/// EPnP with β-cases N = 1, 2, 3 (N = 1, 2 for planar input), each polished
/// by Gauss-Newton; the case with the lowest mean reprojection error wins.
pub fn solve_epnp(problem: &PnpProblem) -> Result<RigidPose, PnpError> {
    let solver = Solver::new(problem)?;
    let planar = solver.frame.len() == 3;
    let mut inits = vec![solver.betas_n1()];
    inits.push(solver.betas_linearized(2));
    if !planar {
        inits.push(solver.betas_linearized(3));
    }
    let extra = if problem.len() == PnpProblem::MIN_POINTS { depth_candidate(problem) } else { None };
    let best = inits
        .into_iter()
        .flatten()
        .filter_map(|b| solver.pose_from_betas(&solver.polish(b)))
        .chain(extra)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(PnpError::DegenerateGeometry("no admissible control-point solution"))?;
    let mut pose = best.0;
    if problem.len() == PnpProblem::MIN_POINTS {
        // the β-cases only approximate the minimal solution; finish on the
        // reprojection error directly
        pose = super::refine_pose(&pose, problem, GAUSS_NEWTON_ITERS).pose;
    }
    let behind = problem.world().iter().filter(|x| pose.transform(x).z <= 0.0).count();
    if 2 * behind >= problem.len() {
        return Err(PnpError::BehindCamera { behind, total: problem.len() });
    }
    Ok(pose)
}
