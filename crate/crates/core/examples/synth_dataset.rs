//! Generate a small synthetic dataset, reload it, corrupt it and solve it.

use perspface::cli::predict;
use perspface::metrics::add_metric;
use perspface::synth::{generate_dataset, load_dataset, GeneratorConfig, NoiseModel, MANIFEST_FILE};
use perspface::RansacConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("perspface-synth-example");
    let cfg = GeneratorConfig { samples: 5, seed: 11, m: 512, ..Default::default() };
    let manifest = generate_dataset(&cfg, &out)?;
    println!("wrote {} samples under {}", manifest.samples.len(), out.display());

    let (_, samples) = load_dataset(&out.join(MANIFEST_FILE))?;
    let noise = NoiseModel { pixel_sigma: 1.0, outlier_rate: 0.2, seed: 11, ..Default::default() };
    let ransac = RansacConfig { seed: 11, ..Default::default() };
    for s in &samples {
        let p = predict(s, &noise, &ransac);
        match p.pose {
            Some(rec) => {
                let pose = rec.to_pose()?;
                println!(
                    "sample {}: tz {:.3} m, {} inliers, ADD {:.3} mm",
                    s.id,
                    s.pose.translation.z,
                    p.inliers,
                    add_metric(&s.mesh, &s.pose, &pose)?
                );
            }
            None => println!("sample {}: failed ({})", s.id, p.error.unwrap_or_default()),
        }
    }
    Ok(())
}
