//! Pose recovery from 2D-3D matches: EPnP, DLT and RANSAC with outliers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perspface::geometry::{euler_to_rotation, project_perspective};
use perspface::pnp::{solve_dlt, solve_epnp, solve_pnp_ransac};
use perspface::{CameraIntrinsics, EulerAngles, PnpProblem, RansacConfig, RigidPose, Vec2, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = RigidPose {
        rotation: euler_to_rotation(&EulerAngles::new(35.0, -12.0, 8.0)),
        translation: Vec3::new(0.05, 0.02, 0.45),
    };
    let world: Vec<Vec3> = (0..500)
        .map(|_| Vec3::new(rng.random_range(-0.07..0.07), rng.random_range(-0.09..0.09), rng.random_range(-0.04..0.04)))
        .collect();
    let intr = CameraIntrinsics::default();
    let (mut pixels, _) = project_perspective(&world, &truth, &intr)?;

    let clean = PnpProblem::new(pixels.clone(), world.clone(), intr)?;
    for (name, pose) in [("epnp", solve_epnp(&clean)?), ("dlt", solve_dlt(&clean)?)] {
        println!(
            "{name:>6}: {:.2e} deg, {:.2e} m",
            truth.rotation_angle_to(&pose),
            truth.translation_distance_to(&pose)
        );
    }

    // jitter every pixel by ~0.5 px, then replace 40% with random locations
    for p in pixels.iter_mut() {
        *p += Vec2::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    }
    for p in pixels.iter_mut().take(200) {
        *p = Vec2::new(rng.random_range(0.0..1280.0), rng.random_range(0.0..720.0));
    }
    let noisy = PnpProblem::new(pixels, world, intr)?;
    let plain = solve_epnp(&noisy)?;
    let robust = solve_pnp_ransac(&noisy, &RansacConfig { seed: 1, ..Default::default() })?;
    println!("  epnp with outliers: {:.2} deg", truth.rotation_angle_to(&plain));
    println!(
        "ransac with outliers: {:.4} deg, {:.2} mm, {} inliers after {} iterations",
        truth.rotation_angle_to(&robust.pose),
        truth.translation_distance_to(&robust.pose) * 1000.0,
        robust.inliers.len(),
        robust.iterations
    );
    Ok(())
}
