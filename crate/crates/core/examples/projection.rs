//! Perspective vs. weak-perspective projection of the synthetic face as it
//! moves away from the camera.

use perspface::geometry::{euler_to_rotation, fit_orthographic, orthographic_residual, project_perspective};
use perspface::synth::make_synthetic_face;
use perspface::{CameraIntrinsics, EulerAngles, RigidPose, Vec3};

fn main() {
    let mesh = make_synthetic_face(0, 1220).expect("face");
    let intr = CameraIntrinsics::default();
    let rotation = euler_to_rotation(&EulerAngles::new(25.0, -10.0, 5.0));
    let rotated: Vec<Vec3> = mesh.vertices().iter().map(|v| rotation * v).collect();

    println!("{:>6} {:>10} {:>16}", "tz (m)", "scale", "rms residual px");
    for tz in [0.3, 0.6, 1.2, 2.4, 4.8] {
        let pose = RigidPose { rotation, translation: Vec3::new(0.0, 0.0, tz) };
        let (pixels, _) = project_perspective(mesh.vertices(), &pose, &intr).expect("face in front of camera");
        let fit = fit_orthographic(&rotated, &pixels).expect("fit");
        let rms = (orthographic_residual(&rotated, &pixels, &fit) / pixels.len() as f64).sqrt();
        println!("{tz:>6.1} {:>10.2} {rms:>16.4}", fit.scale);
    }
}
