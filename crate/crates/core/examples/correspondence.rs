//! Ground-truth dense correspondences for one posed face, in both weighting
//! modes, and how well the selected 3D points reproject.

use perspface::correspondence::{
    build_gt_correspondence_with, corresponding_points, positional_encoding_2d, rasterize_segmentation, sample_pixels,
    WeightMode,
};
use perspface::geometry::{euler_to_rotation, project_perspective};
use perspface::synth::make_synthetic_face;
use perspface::{CameraIntrinsics, EulerAngles, RigidPose, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = make_synthetic_face(1, 1220)?;
    let intr = CameraIntrinsics::default();
    let pose = RigidPose {
        rotation: euler_to_rotation(&EulerAngles::new(40.0, 15.0, -10.0)),
        translation: Vec3::new(0.02, -0.01, 0.3),
    };

    let mask = rasterize_segmentation(&mesh, &pose, &intr, 1280, 720)?;
    let pixels = sample_pixels(&mask, 1024, 7)?;
    println!("face covers {} pixels; sampled {}", mask.count(), pixels.len());

    for mode in [WeightMode::ScreenSpace, WeightMode::PerspectiveCorrect] {
        let m = build_gt_correspondence_with(&mesh, &pose, &intr, &pixels, mode)?;
        let pts = corresponding_points(&m, mesh.vertices())?;
        let (proj, _) = project_perspective(&pts, &pose, &intr)?;
        let worst = proj.iter().zip(pixels.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("{mode:?}: max {} nonzeros per row, worst reprojection {worst:.2e} px", m.max_row_nonzeros());
    }

    let enc = positional_encoding_2d(&pixels, 64)?;
    println!("positional encoding: {}x{}", enc.nrows(), enc.ncols());
    Ok(())
}
