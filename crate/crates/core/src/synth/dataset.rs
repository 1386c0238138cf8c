use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_samples, GeneratorConfig, SynthError, SyntheticSample};
use crate::correspondence::{CorrespondenceMatrix, PixelSet, SegmentationMask};
use crate::geometry::{CameraIntrinsics, RigidPose};
use crate::io::write_atomic;
use crate::mesh::TriangleMesh;
use crate::pfm::{mask_to_pfm, pfm_to_mask, PfmImage};

pub const MANIFEST_FILE: &str = "manifest.json";
const MESH_FILE: &str = "mesh.obj";
const SAMPLE_DIR: &str = "samples";

/// Loaded correspondence weights pass through nine-digit text.
const TEXT_WEIGHT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    /// Row-major rotation.
    pub rotation: [f64; 9],
    /// Metres.
    pub translation: [f64; 3],
}

impl From<&RigidPose> for PoseRecord {
    fn from(p: &RigidPose) -> Self {
        Self { rotation: p.rotation_row_major(), translation: [p.translation.x, p.translation.y, p.translation.z] }
    }
}

impl PoseRecord {
    pub fn to_pose(&self) -> Result<RigidPose, SynthError> {
        RigidPose::from_row_major(self.rotation, self.translation).map_err(|e| SynthError::Manifest(e.to_string()))
    }
}

/// Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub id: usize,
    pub mesh: String,
    pub pose: PoseRecord,
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub pixels: String,
    pub correspondence: String,
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GeneratorConfig,
    pub samples: Vec<ManifestSample>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| SynthError::Manifest(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn sample_stem(id: usize) -> String {
    format!("{SAMPLE_DIR}/{id:06}")
}

fn write_sample(dir: &Path, s: &SyntheticSample) -> Result<ManifestSample, SynthError> {
    let stem = sample_stem(s.id);
    let entry = ManifestSample {
        id: s.id,
        mesh: MESH_FILE.into(),
        pose: PoseRecord::from(&s.pose),
        intrinsics: s.intrinsics,
        width: s.width,
        height: s.height,
        pixels: format!("{stem}.pixels.txt"),
        correspondence: format!("{stem}.corr.txt"),
        mask: format!("{stem}.mask.pfm"),
    };
    write_atomic(&dir.join(&entry.pixels), s.pixels.to_text().as_bytes())?;
    s.correspondence.save(dir.join(&entry.correspondence))?;
    write_atomic(&dir.join(&entry.mask), &mask_to_pfm(s.width, s.height, &s.mask.data).encode())?;
    Ok(entry)
}

/// Generates every sample and writes it under `out`, finishing with the
/// manifest. Identical configurations give byte-identical trees.
pub fn generate_dataset(cfg: &GeneratorConfig, out: &Path) -> Result<Manifest, SynthError> {
    let samples = generate_samples(cfg)?;
    fs::create_dir_all(out.join(SAMPLE_DIR))?;
    cfg.mesh()?.save(out.join(MESH_FILE))?;
    let entries = samples.par_iter().map(|s| write_sample(out, s)).collect::<Result<Vec<_>, _>>()?;
    let manifest = Manifest { config: cfg.clone(), samples: entries };
    write_atomic(&out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

fn load_sample(dir: &Path, e: &ManifestSample, mesh: Arc<TriangleMesh>) -> Result<SyntheticSample, SynthError> {
    let pixels = PixelSet::parse_text(&fs::read_to_string(dir.join(&e.pixels))?)?;
    let correspondence = CorrespondenceMatrix::load(dir.join(&e.correspondence))?;
    let img = PfmImage::decode(&fs::read(dir.join(&e.mask))?)?;
    if (img.width, img.height) != (e.width, e.height) {
        return Err(SynthError::Inconsistent { id: e.id, msg: "mask size differs from the manifest".into() });
    }
    let mask = SegmentationMask { width: img.width, height: img.height, data: pfm_to_mask(&img)? };
    Ok(SyntheticSample {
        id: e.id,
        mesh,
        pose: e.pose.to_pose()?,
        intrinsics: e.intrinsics,
        width: e.width,
        height: e.height,
        pixels,
        correspondence,
        mask,
    })
}

/// Reads a dataset back and re-checks each sample against its mesh and pose.
pub fn load_dataset(manifest_path: &Path) -> Result<(Manifest, Vec<SyntheticSample>), SynthError> {
    let manifest = Manifest::load(manifest_path)?;
    let dir: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut meshes: HashMap<&str, Arc<TriangleMesh>> = HashMap::new();
    for e in &manifest.samples {
        if !meshes.contains_key(e.mesh.as_str()) {
            meshes.insert(&e.mesh, Arc::new(TriangleMesh::load(dir.join(&e.mesh))?));
        }
    }
    let samples = manifest
        .samples
        .par_iter()
        .map(|e| {
            let s = load_sample(&dir, e, meshes[e.mesh.as_str()].clone())?;
            s.check_consistency(manifest.config.weight_mode, TEXT_WEIGHT_TOLERANCE)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    Ok((manifest, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> GeneratorConfig {
        GeneratorConfig { samples: n, seed: 4, m: 64, width: 320, height: 240, ..Default::default() }
    }

    fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(&small(0), dir.path()).unwrap();
        assert!(m.samples.is_empty());
        let (_, samples) = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(samples.is_empty());
    }

    #[test]
    fn reload_is_consistent_and_regeneration_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(10);
        let manifest = generate_dataset(&cfg, dir.path()).unwrap();
        let (loaded, samples) = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded, manifest);
        assert_eq!(samples.len(), 10);
        let fresh = generate_samples(&cfg).unwrap();
        for (a, b) in samples.iter().zip(&fresh) {
            assert_eq!(a.pose, b.pose);
            assert_eq!(a.pixels, b.pixels);
            assert_eq!(a.mask, b.mask);
            assert_eq!(*a.mesh, *b.mesh);
        }
        let again = tempfile::tempdir().unwrap();
        generate_dataset(&loaded.config, again.path()).unwrap();
        assert_eq!(tree(dir.path()), tree(again.path()));
    }

    #[test]
    fn tampered_sample_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_dataset(&small(2), dir.path()).unwrap();
        let mut m = manifest.clone();
        m.samples[1].pose.translation[2] += 0.05;
        fs::write(dir.path().join(MANIFEST_FILE), m.to_json()).unwrap();
        assert!(matches!(load_dataset(&dir.path().join(MANIFEST_FILE)), Err(SynthError::Inconsistent { id: 1, .. })));
    }

    #[test]
    fn missing_manifest_is_io() {
        let err = load_dataset(Path::new("/nonexistent/manifest.json")).unwrap_err();
        assert!(err.is_io());
    }
}
