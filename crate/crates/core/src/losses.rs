//! Training objectives over shape, correspondence and segmentation outputs,
//! each returning its value together with the analytic gradient with respect
//! to the prediction.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::correspondence::{CorrespondenceMatrix, SegmentationMask, ROW_SUM_TOLERANCE};
use crate::geometry::Vec3;
use crate::uvmap::UvPositionMap;

/// Floor applied inside every logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("prediction row {0} is not a probability distribution")]
    NotAProbabilityRow(usize),
    #[error("loss weights must be finite and non-negative")]
    InvalidWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loss<G> {
    pub value: f64,
    pub grad: G,
}

/// Weights of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub shape: f64,
    pub correspondence: f64,
    pub points: f64,
    pub segmentation: f64,
    /// Entropy regularizer inside the correspondence loss.
    pub entropy: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { shape: 0.5, correspondence: 0.01, points: 1.0, segmentation: 0.01, entropy: 0.1 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        let all = [self.shape, self.correspondence, self.points, self.segmentation, self.entropy];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(LossError::InvalidWeights)
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn flog(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// `d/dx log(max(x, ε))`
#[inline]
fn dflog(x: f64) -> f64 {
    if x > LOG_FLOOR {
        1.0 / x
    } else {
        0.0
    }
}

/// Masked per-pixel L1 between a target map and a prediction. The mask is
/// the target's weight channel; per pixel the three channel differences are
/// summed.
pub fn uv_weighted_l1(target: &UvPositionMap, pred: &UvPositionMap) -> Result<Loss<Vec<[f64; 3]>>, LossError> {
    if (target.width(), target.height()) != (pred.width(), pred.height()) {
        return Err(LossError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            target.width(),
            target.height(),
            pred.width(),
            pred.height()
        )));
    }
    let mut value = 0.0;
    let grad = target
        .data()
        .iter()
        .zip(pred.data())
        .zip(target.weights())
        .map(|((s, s_hat), &w)| {
            if !w {
                return [0.0; 3];
            }
            let mut g = [0.0; 3];
            for c in 0..3 {
                let d = s_hat[c] - s[c];
                value += d.abs();
                g[c] = sign(d);
            }
            g
        })
        .collect();
    Ok(Loss { value, grad })
}

/// Which argument order the KL term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlDirection {
    /// `KL(M ‖ M̂)`: finite for sparse targets.
    #[default]
    TargetFirst,
    /// `KL(M̂ ‖ M)`, which blows up (up to the log floor) wherever the target
    /// is zero and the prediction is not.
    PredictionFirst,
}

/// Mean over rows of `KL + λ·H(M̂ᵢ)`, checking that every predicted row lies
/// on the simplex.
pub fn correspondence_loss(
    pred: &DMatrix<f64>,
    target: &CorrespondenceMatrix,
    entropy_weight: f64,
    direction: KlDirection,
) -> Result<Loss<DMatrix<f64>>, LossError> {
    for (i, row) in pred.row_iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(LossError::NotAProbabilityRow(i));
        }
    }
    correspondence_loss_unchecked(pred, target, entropy_weight, direction)
}

/// [`correspondence_loss`] without the simplex check on `pred`; the value is
/// still defined for any non-negative matrix, which is what finite-difference
/// checks need.
pub fn correspondence_loss_unchecked(
    pred: &DMatrix<f64>,
    target: &CorrespondenceMatrix,
    entropy_weight: f64,
    direction: KlDirection,
) -> Result<Loss<DMatrix<f64>>, LossError> {
    if pred.nrows() != target.m() || pred.ncols() != target.n() {
        return Err(LossError::DimensionMismatch(format!(
            "prediction is {}x{}, target is {}x{}",
            pred.nrows(),
            pred.ncols(),
            target.m(),
            target.n()
        )));
    }
    let m = pred.nrows().max(1) as f64;
    let mut grad = DMatrix::zeros(pred.nrows(), pred.ncols());
    let mut kl = 0.0;
    let mut neg_entropy = 0.0;
    let mut dense_row = vec![0.0; pred.ncols()];
    for (i, row) in target.rows().iter().enumerate() {
        for &(j, w) in row {
            dense_row[j] += w;
        }
        for j in 0..pred.ncols() {
            let q = pred[(i, j)];
            let p = dense_row[j];
            // entropy part: q·log q
            neg_entropy += q * flog(q);
            let mut g = entropy_weight * (flog(q) + q * dflog(q));
            match direction {
                KlDirection::TargetFirst => {
                    if p > 0.0 {
                        kl += p * (flog(p) - flog(q));
                        g -= p * dflog(q);
                    }
                }
                KlDirection::PredictionFirst => {
                    kl += q * (flog(q) - flog(p));
                    g += flog(q) + q * dflog(q) - flog(p);
                }
            }
            grad[(i, j)] = g / m;
        }
        for &(j, _) in row {
            dense_row[j] = 0.0;
        }
    }
    Ok(Loss { value: (kl + entropy_weight * neg_entropy) / m, grad })
}

/// Sum of absolute coordinate differences over all points.
pub fn corr_l1(target: &[Vec3], pred: &[Vec3]) -> Result<Loss<Vec<Vec3>>, LossError> {
    if target.len() != pred.len() {
        return Err(LossError::DimensionMismatch(format!("{} vs {} points", target.len(), pred.len())));
    }
    let mut value = 0.0;
    let grad = target
        .iter()
        .zip(pred)
        .map(|(x, x_hat)| {
            let d = x_hat - x;
            value += d.abs().sum();
            d.map(sign)
        })
        .collect();
    Ok(Loss { value, grad })
}

/// Mean two-class softmax cross-entropy; mask `true` is class 1 (face).
pub fn seg_cross_entropy(logits: &[[f64; 2]], mask: &SegmentationMask) -> Result<Loss<Vec<[f64; 2]>>, LossError> {
    if logits.len() != mask.data.len() {
        return Err(LossError::DimensionMismatch(format!("{} logits for {} pixels", logits.len(), mask.data.len())));
    }
    let n = logits.len().max(1) as f64;
    let mut value = 0.0;
    let grad = logits
        .iter()
        .zip(&mask.data)
        .map(|(l, &face)| {
            let mx = l[0].max(l[1]);
            let e = [(l[0] - mx).exp(), (l[1] - mx).exp()];
            let z = e[0] + e[1];
            let k = usize::from(face);
            value += -(l[k] - mx - z.ln());
            let mut g = [e[0] / z, e[1] / z];
            g[k] -= 1.0;
            [g[0] / n, g[1] / n]
        })
        .collect();
    Ok(Loss { value: value / n, grad })
}

/// Individual loss values feeding the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub shape: f64,
    pub correspondence: f64,
    pub points: f64,
    pub segmentation: f64,
}

pub fn total_loss(terms: &LossTerms, w: &LossWeights) -> f64 {
    w.shape * terms.shape
        + w.correspondence * terms.correspondence
        + w.points * terms.points
        + w.segmentation * terms.segmentation
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uv_l1_examples() {
        let mut s = UvPositionMap::zeros(3, 3);
        s.set(1, 1, Some([0.0, 0.0, 0.0]));
        let mut s_hat = s.clone();
        assert_eq!(uv_weighted_l1(&s, &s_hat).unwrap().value, 0.0);
        s_hat.set(1, 1, Some([1.0, -2.0, 3.0]));
        let l = uv_weighted_l1(&s, &s_hat).unwrap();
        assert_eq!(l.value, 6.0);
        assert_eq!(l.grad[4], [1.0, -1.0, 1.0]);
        // differences outside the target's mask are ignored
        let mut s_hat = s.clone();
        s_hat.set(0, 0, Some([5.0, 5.0, 5.0]));
        assert_eq!(uv_weighted_l1(&s, &s_hat).unwrap().value, 0.0);
        assert!(uv_weighted_l1(&s, &UvPositionMap::zeros(3, 2)).is_err());
    }

    #[test]
    fn correspondence_loss_examples() {
        let gt = CorrespondenceMatrix::new(3, vec![vec![(1, 1.0)], vec![(0, 1.0)]]).unwrap();
        let same = gt.to_dense();
        let l = correspondence_loss(&same, &gt, 0.1, KlDirection::TargetFirst).unwrap();
        assert!(l.value.abs() < 1e-15);
        let l = correspondence_loss(&same, &gt, 0.0, KlDirection::PredictionFirst).unwrap();
        assert!(l.value.abs() < 1e-15);

        let n = 1220;
        let uniform = DMatrix::from_element(1, n, 1.0 / n as f64);
        let gt = CorrespondenceMatrix::new(n, vec![(0..n).map(|j| (j, 1.0 / n as f64)).collect()]).unwrap();
        let l = correspondence_loss(&uniform, &gt, 0.1, KlDirection::TargetFirst).unwrap();
        // KL is zero, entropy term is −λ·ln(1220)
        assert!((l.value + 0.1 * 7.106606137727303).abs() < 1e-12);

        let bad = DMatrix::from_element(2, 3, 0.5);
        assert_eq!(
            correspondence_loss(
                &bad,
                &CorrespondenceMatrix::new(3, vec![vec![(0, 1.0)]; 2]).unwrap(),
                0.1,
                KlDirection::TargetFirst
            ),
            Err(LossError::NotAProbabilityRow(0))
        );
    }

    #[test]
    fn corr_l1_examples() {
        let a = vec![Vec3::new(0.1, 0.2, 0.3)];
        assert_eq!(corr_l1(&a, &a).unwrap().value, 0.0);
        let b = vec![Vec3::new(0.101, 0.2, 0.3)];
        assert!((corr_l1(&a, &b).unwrap().value - 0.001).abs() < 1e-15);
        assert!(corr_l1(&a, &[]).is_err());
    }

    #[test]
    fn seg_examples() {
        let mut mask = SegmentationMask::new(2, 1);
        mask.data[1] = true;
        let saturated = [[20.0, -20.0], [-20.0, 20.0]];
        assert!(seg_cross_entropy(&saturated, &mask).unwrap().value < 1e-15);
        let l = seg_cross_entropy(&[[0.0, 0.0], [0.0, 0.0]], &mask).unwrap();
        assert!((l.value - std::f64::consts::LN_2).abs() < 1e-15);
        for g in &l.grad {
            assert!((g[0] + g[1]).abs() < 1e-15);
        }
        // large logits stay finite
        let l = seg_cross_entropy(&[[1e4, -1e4], [1e4, -1e4]], &mask).unwrap();
        assert!(l.value.is_finite() && (l.value - 1e4).abs() < 1e-9);
    }

    #[test]
    fn total_examples() {
        let w = LossWeights::default();
        assert_eq!(total_loss(&LossTerms::default(), &w), 0.0);
        let ones = LossTerms { shape: 1.0, correspondence: 1.0, points: 1.0, segmentation: 1.0 };
        assert!((total_loss(&ones, &w) - 1.52).abs() < 1e-15);
        let unit = LossWeights { shape: 1.0, correspondence: 1.0, points: 1.0, segmentation: 1.0, entropy: 0.0 };
        let t = LossTerms { shape: 0.5, correspondence: 2.0, points: 3.0, segmentation: 4.0 };
        assert_eq!(total_loss(&t, &unit), 9.5);
        assert!(LossWeights { entropy: -1.0, ..w }.validate().is_err());
    }
}
