use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{derive_seed, SynthError, SyntheticSample};
use crate::correspondence::{CorrespondenceMatrix, PixelSet};
use crate::geometry::{Vec2, Vec3};

/// Perturbations standing in for an imperfect predictor. Every field at zero
/// reproduces the ground truth exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Gaussian jitter on pixel positions, px.
    pub pixel_sigma: f64,
    /// Log-normal jitter on correspondence weights before renormalizing.
    pub corr_sigma: f64,
    /// Fraction of rows whose pixel and vertex are replaced at random.
    pub outlier_rate: f64,
    /// Gaussian jitter on the reconstructed canonical shape, m.
    pub vertex_sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), SynthError> {
        let named = [
            ("pixel_sigma", self.pixel_sigma),
            ("corr_sigma", self.corr_sigma),
            ("outlier_rate", self.outlier_rate),
            ("vertex_sigma", self.vertex_sigma),
        ];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidConfig(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if self.outlier_rate > 1.0 {
            return Err(SynthError::InvalidConfig(format!(
                "outlier_rate must be at most 1, got {}",
                self.outlier_rate
            )));
        }
        Ok(())
    }

    /// Number of rows [`corrupt`] replaces out of `m`.
    pub fn outlier_count(&self, m: usize) -> usize {
        ((self.outlier_rate * m as f64).round() as usize).min(m)
    }
}

/// Predicted quantities for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub pixels: PixelSet,
    pub correspondence: CorrespondenceMatrix,
    /// Reconstructed canonical shape.
    pub vertices: Vec<Vec3>,
    /// Rows replaced by outliers, ascending.
    pub outliers: Vec<usize>,
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

/// Applies, in order: pixel jitter, weight jitter, outlier replacement and
/// vertex jitter. Deterministic in the noise seed and the sample id.
pub fn corrupt(sample: &SyntheticSample, noise: &NoiseModel) -> Result<Corrupted, SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.seed, sample.id as u64));
    let mut pixels = sample.pixels.0.clone();
    let mut rows: Vec<Vec<(usize, f64)>> = sample.correspondence.rows().to_vec();
    let mut vertices = sample.mesh.vertices().to_vec();
    let n = vertices.len();

    if noise.pixel_sigma > 0.0 {
        for p in &mut pixels {
            *p += Vec2::new(gauss(&mut rng, noise.pixel_sigma), gauss(&mut rng, noise.pixel_sigma));
        }
    }
    if noise.corr_sigma > 0.0 {
        for row in &mut rows {
            for e in row.iter_mut() {
                e.1 *= gauss(&mut rng, noise.corr_sigma).exp();
            }
            let s: f64 = row.iter().map(|e| e.1).sum();
            row.iter_mut().for_each(|e| e.1 /= s);
        }
    }
    let k = noise.outlier_count(pixels.len());
    let mut outliers = Vec::new();
    if k > 0 {
        outliers = index::sample(&mut rng, pixels.len(), k).into_vec();
        outliers.sort_unstable();
        for &i in &outliers {
            pixels[i] =
                Vec2::new(rng.random_range(0.0..sample.width as f64), rng.random_range(0.0..sample.height as f64));
            rows[i] = vec![(rng.random_range(0..n), 1.0)];
        }
    }
    if noise.vertex_sigma > 0.0 {
        for v in &mut vertices {
            *v += Vec3::new(
                gauss(&mut rng, noise.vertex_sigma),
                gauss(&mut rng, noise.vertex_sigma),
                gauss(&mut rng, noise.vertex_sigma),
            );
        }
    }
    let correspondence = CorrespondenceMatrix::new(n, rows)?;
    Ok(Corrupted { pixels: PixelSet(pixels), correspondence, vertices, outliers })
}
