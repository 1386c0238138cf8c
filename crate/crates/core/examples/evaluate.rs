//! Pose error metrics: per-sample records, aggregation and the CSV layout.

use perspface::geometry::euler_to_rotation;
use perspface::metrics::{aggregate_report, PoseErrorRecord};
use perspface::synth::make_synthetic_face;
use perspface::{EulerAngles, PoseMetrics, RigidPose, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = make_synthetic_face(0, 1220)?;
    let pose = |y, p, r, tz| RigidPose {
        rotation: euler_to_rotation(&EulerAngles::new(y, p, r)),
        translation: Vec3::new(0.0, 0.0, tz),
    };
    let pairs = [
        (pose(10.0, 0.0, 0.0, 0.5), pose(11.0, 0.5, 0.0, 0.505)),
        (pose(-30.0, 20.0, 5.0, 0.7), pose(-29.0, 19.0, 5.5, 0.69)),
        (pose(179.0, 0.0, 0.0, 0.4), pose(-179.0, 0.0, 0.0, 0.4)),
    ];
    let mut records = Vec::new();
    for (gt, pred) in &pairs {
        let r = PoseErrorRecord::between(gt, pred).with_add(&mesh, gt, pred)?;
        println!(
            "yaw {:.2}  pitch {:.2}  roll {:.2}  tz {:.1} mm  ADD {:.2} mm",
            r.yaw,
            r.pitch,
            r.roll,
            r.tz,
            r.add_mm.unwrap_or(f64::NAN)
        );
        records.push(r);
    }
    print!("{}", aggregate_report(&records)?.to_csv());

    // a published-style row rebuilt from its component errors
    let row = PoseMetrics::from_components([0.99, 1.43, 0.55], [0.97, 2.12, 9.45], Some(10.01), 1);
    println!("MAE_r {:.2}, MAE_t {:.2}", row.mae_r, row.mae_t);
    Ok(())
}
