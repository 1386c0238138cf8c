use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{refine_pose, reprojection_error, solve_epnp, PnpError, PnpProblem};
use crate::geometry::RigidPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub inlier_threshold_px: f64,
    pub seed: u64,
    /// Stop early once a hypothesis with this probability of an all-inlier
    /// sample has been drawn. Set to 1.0 to always run every iteration.
    pub confidence: f64,
    pub refine: bool,
    pub refine_iterations: usize,
}

impl RansacConfig {
    pub const MIN_SAMPLE: usize = 4;

    pub fn validate(&self) -> Result<(), PnpError> {
        if self.max_iterations < 1 {
            return Err(PnpError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.inlier_threshold_px > 0.0) || !self.inlier_threshold_px.is_finite() {
            return Err(PnpError::InvalidConfig("inlier threshold must be positive"));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(PnpError::InvalidConfig("confidence must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            inlier_threshold_px: 2.0,
            seed: 0,
            confidence: 0.99,
            refine: true,
            refine_iterations: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RansacOutcome {
    pub pose: RigidPose,
    /// Indices within the threshold under the returned pose, ascending.
    pub inliers: Vec<usize>,
    pub iterations: usize,
}

/// Hypothesis ranking key: more inliers, then lower mean inlier error, then
/// earlier iteration.
#[derive(Debug, Clone, Copy)]
struct Score {
    count: usize,
    mean_error: f64,
    iteration: usize,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        (other.count, self.mean_error, self.iteration) < (self.count, other.mean_error, other.iteration)
    }
}

fn inliers_of(p: &PnpProblem, pose: &RigidPose, threshold: f64) -> (Vec<usize>, f64) {
    let intr = p.intrinsics();
    let mut idx = Vec::new();
    let mut sum = 0.0;
    for (i, (x, v)) in p.world().iter().zip(p.pixels()).enumerate() {
        let e = reprojection_error(pose, intr, x, v);
        if e < threshold {
            idx.push(i);
            sum += e;
        }
    }
    let mean = if idx.is_empty() { f64::INFINITY } else { sum / idx.len() as f64 };
    (idx, mean)
}

/// Seeded minimal-sample consensus around [`solve_epnp`]. The winning
/// hypothesis's inliers are re-solved together and, if enabled, refined.
pub fn solve_pnp_ransac(p: &PnpProblem, cfg: &RansacConfig) -> Result<RansacOutcome, PnpError> {
    cfg.validate()?;
    let m = p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Score, RigidPose)> = None;
    let mut iterations = 0;
    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let sample: Vec<usize> = index::sample(&mut rng, m, RansacConfig::MIN_SAMPLE).into_vec();
        let Some(minimal) = p.subset(&sample) else { break };
        let Ok(pose) = solve_epnp(&minimal) else { continue };
        let (inl, mean_error) = inliers_of(p, &pose, cfg.inlier_threshold_px);
        let score = Score { count: inl.len(), mean_error, iteration: it };
        if best.as_ref().is_none_or(|(b, _)| score.beats(b)) {
            best = Some((score, pose));
        }
        let ratio = best.as_ref().map_or(0.0, |(b, _)| b.count as f64 / m as f64);
        if cfg.confidence < 1.0 && ratio > 0.0 {
            let all_inlier = ratio.powi(RansacConfig::MIN_SAMPLE as i32);
            let needed = if all_inlier >= 1.0 { 0.0 } else { (1.0 - cfg.confidence).ln() / (1.0 - all_inlier).ln() };
            if (iterations as f64) >= needed {
                break;
            }
        }
    }
    let (score, hypothesis) = best.ok_or(PnpError::NoConsensus(0))?;
    if score.count < RansacConfig::MIN_SAMPLE {
        return Err(PnpError::NoConsensus(score.count));
    }
    let (support, _) = inliers_of(p, &hypothesis, cfg.inlier_threshold_px);
    let subset = p.subset(&support).expect("support has at least four points");
    let mut pose = solve_epnp(&subset).unwrap_or(hypothesis);
    if cfg.refine {
        pose = refine_pose(&pose, &subset, cfg.refine_iterations.max(1)).pose;
    }
    let (inliers, _) = inliers_of(p, &pose, cfg.inlier_threshold_px);
    Ok(RansacOutcome { pose, inliers, iterations })
}
