//! Evaluate each training objective on a perturbed prediction and combine them.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perspface::correspondence::{build_gt_correspondence, corresponding_points, rasterize_segmentation, sample_pixels};
use perspface::geometry::euler_to_rotation;
use perspface::losses::{
    corr_l1, correspondence_loss, seg_cross_entropy, total_loss, uv_weighted_l1, KlDirection, LossTerms, LossWeights,
};
use perspface::synth::make_synthetic_face;
use perspface::uvmap::render_uv_position_map;
use perspface::{CameraIntrinsics, EulerAngles, RigidPose, UvPositionMap, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mesh = make_synthetic_face(0, 1220)?;
    let intr = CameraIntrinsics::default();
    let pose = RigidPose {
        rotation: euler_to_rotation(&EulerAngles::new(-20.0, 5.0, 0.0)),
        translation: Vec3::new(0.0, 0.0, 0.5),
    };

    // shape: a map whose valid pixels are off by up to a millimetre
    let target = render_uv_position_map(&mesh, 64, 64)?.map;
    let noisy = target.data().iter().map(|p| p.map(|v| v + rng.random_range(-1e-3..1e-3))).collect();
    let pred = UvPositionMap::from_parts(64, 64, noisy, vec![true; 64 * 64])?;
    let shape = uv_weighted_l1(&target, &pred)?.value;

    // correspondence: mix the ground truth with a uniform distribution
    let mask = rasterize_segmentation(&mesh, &pose, &intr, 1280, 720)?;
    let pixels = sample_pixels(&mask, 256, 1)?;
    let gt = build_gt_correspondence(&mesh, &pose, &intr, &pixels)?;
    let n = mesh.vertex_count() as f64;
    let soft = gt.to_dense().map(|w| 0.9 * w + 0.1 / n);
    let weights = LossWeights::default();
    let corr = correspondence_loss(&soft, &gt, weights.entropy, KlDirection::TargetFirst)?.value;
    let uniform = DMatrix::from_element(gt.m(), gt.n(), 1.0 / n);
    let corr_uniform = correspondence_loss(&uniform, &gt, weights.entropy, KlDirection::TargetFirst)?.value;

    // points: ground-truth points shifted by 2 mm along z
    let gt_pts = corresponding_points(&gt, mesh.vertices())?;
    let shifted: Vec<Vec3> = gt_pts.iter().map(|p| p + Vec3::new(0.0, 0.0, 0.002)).collect();
    let points = corr_l1(&gt_pts, &shifted)?.value;

    // segmentation: confident logits that agree with the mask 95% of the time
    let logits: Vec<[f64; 2]> = mask
        .data
        .iter()
        .map(|&face| {
            let right = rng.random_bool(0.95);
            if face == right {
                [-3.0, 3.0]
            } else {
                [3.0, -3.0]
            }
        })
        .collect();
    let seg = seg_cross_entropy(&logits, &mask)?.value;

    let terms = LossTerms { shape, correspondence: corr, points, segmentation: seg };
    println!("shape {shape:.4}  correspondence {corr:.4} (uniform {corr_uniform:.4})  points {points:.4}  segmentation {seg:.4}");
    println!("weighted total {:.4}", total_loss(&terms, &weights));
    Ok(())
}
