//! 6DoF pose evaluation: per-angle and per-axis mean absolute errors and the
//! ADD vertex distance. Angles are in degrees, translations and ADD in mm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_to_euler, RigidPose};
use crate::mesh::TriangleMesh;

/// Column header of the metrics CSV.
pub const CSV_HEADER: &str = "yaw,pitch,roll,mae_r,tx,ty,tz,mae_t,add_mm";

const M_TO_MM: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{gt} ground-truth poses but {pred} predictions")]
    DimensionMismatch { gt: usize, pred: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("mesh has no vertices")]
    EmptyMesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseMetrics {
    pub mae_yaw: f64,
    pub mae_pitch: f64,
    pub mae_roll: f64,
    pub mae_r: f64,
    pub mae_tx: f64,
    pub mae_ty: f64,
    pub mae_tz: f64,
    pub mae_t: f64,
    /// Mean ADD in mm; `None` when no mesh was involved.
    pub add: Option<f64>,
    pub sample_count: usize,
}

impl PoseMetrics {
    /// Builds the row from its six component MAEs; the two summary columns
    /// are their means.
    pub fn from_components(angles: [f64; 3], translation_mm: [f64; 3], add: Option<f64>, sample_count: usize) -> Self {
        Self {
            mae_yaw: angles[0],
            mae_pitch: angles[1],
            mae_roll: angles[2],
            mae_r: angles.iter().sum::<f64>() / 3.0,
            mae_tx: translation_mm[0],
            mae_ty: translation_mm[1],
            mae_tz: translation_mm[2],
            mae_t: translation_mm.iter().sum::<f64>() / 3.0,
            add,
            sample_count,
        }
    }

    pub fn csv_row(&self) -> String {
        let add = self.add.map_or_else(String::new, |a| a.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.mae_yaw,
            self.mae_pitch,
            self.mae_roll,
            self.mae_r,
            self.mae_tx,
            self.mae_ty,
            self.mae_tz,
            self.mae_t,
            add
        )
    }

    /// Header plus one row, newline terminated.
    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}\n", self.csv_row())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "yaw": self.mae_yaw,
            "pitch": self.mae_pitch,
            "roll": self.mae_roll,
            "mae_r": self.mae_r,
            "tx": self.mae_tx,
            "ty": self.mae_ty,
            "tz": self.mae_tz,
            "mae_t": self.mae_t,
            "add_mm": self.add,
            "sample_count": self.sample_count,
        })
    }
}

/// Absolute angle difference on the circle, in [0, 180].
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Absolute errors of one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseErrorRecord {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub add_mm: Option<f64>,
}

impl PoseErrorRecord {
    pub fn between(gt: &RigidPose, pred: &RigidPose) -> Self {
        let a = rotation_to_euler(&gt.rotation).angles;
        let b = rotation_to_euler(&pred.rotation).angles;
        let dt = (gt.translation - pred.translation).abs() * M_TO_MM;
        Self {
            yaw: angle_difference(a.yaw, b.yaw),
            pitch: angle_difference(a.pitch, b.pitch),
            roll: angle_difference(a.roll, b.roll),
            tx: dt.x,
            ty: dt.y,
            tz: dt.z,
            add_mm: None,
        }
    }

    pub fn with_add(mut self, mesh: &TriangleMesh, gt: &RigidPose, pred: &RigidPose) -> Result<Self, MetricsError> {
        self.add_mm = Some(add_metric(mesh, gt, pred)?);
        Ok(self)
    }
}

pub fn pose_mae(gt: &[RigidPose], pred: &[RigidPose]) -> Result<PoseMetrics, MetricsError> {
    if gt.len() != pred.len() {
        return Err(MetricsError::DimensionMismatch { gt: gt.len(), pred: pred.len() });
    }
    let records: Vec<_> = gt.iter().zip(pred).map(|(g, p)| PoseErrorRecord::between(g, p)).collect();
    aggregate_report(&records)
}

/// Mean distance between the vertices placed by the two poses, in mm.
pub fn add_metric(mesh: &TriangleMesh, gt: &RigidPose, pred: &RigidPose) -> Result<f64, MetricsError> {
    let v = mesh.vertices();
    if v.is_empty() {
        return Err(MetricsError::EmptyMesh);
    }
    let total: f64 = v.iter().map(|x| (gt.transform(x) - pred.transform(x)).norm()).sum();
    Ok(total / v.len() as f64 * M_TO_MM)
}

/// Means every column over the samples. ADD is reported only when every
/// record carries one.
pub fn aggregate_report(records: &[PoseErrorRecord]) -> Result<PoseMetrics, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = records.len() as f64;
    let mean = |f: fn(&PoseErrorRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let add = records.iter().map(|r| r.add_mm).collect::<Option<Vec<f64>>>().map(|a| a.iter().sum::<f64>() / n);
    Ok(PoseMetrics::from_components(
        [mean(|r| r.yaw), mean(|r| r.pitch), mean(|r| r.roll)],
        [mean(|r| r.tx), mean(|r| r.ty), mean(|r| r.tz)],
        add,
        records.len(),
    ))
}
