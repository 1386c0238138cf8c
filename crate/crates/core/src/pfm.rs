//! Portable float map (PFM) encoding for UV position maps and masks.
//!
//! Layout: ASCII header `PF\n<w> <h>\n<scale>\n` (`Pf` for one channel), a
//! negative scale meaning little-endian, then 32-bit floats with rows stored
//! bottom-to-top. A position map is written as an `PF` file next to a `Pf`
//! weight mask holding 0.0/1.0 (`map.pfm` → `map.mask.pfm`).

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::io::write_atomic;
use crate::uvmap::UvPositionMap;

#[derive(Debug, Error)]
pub enum PfmError {
    #[error("malformed PFM: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decoded float image, rows top-to-bottom, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn encode(&self) -> Vec<u8> {
        assert!(self.channels == 1 || self.channels == 3);
        assert_eq!(self.data.len(), self.width * self.height * self.channels);
        let magic = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{magic}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        let row_len = self.width * self.channels;
        for row in self.data.chunks_exact(row_len.max(1)).rev() {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PfmError> {
        let mut pos = 0;
        let mut next_line = || -> Result<&str, PfmError> {
            let rest = &bytes[pos..];
            let end =
                rest.iter().position(|&b| b == b'\n').ok_or_else(|| PfmError::Parse("truncated header".into()))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map(str::trim).map_err(|_| PfmError::Parse("header is not ASCII".into()))
        };
        let channels = match next_line()? {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(PfmError::Parse(format!("bad magic `{other}`"))),
        };
        let dims: Vec<usize> = next_line()?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| PfmError::Parse(format!("bad dimension `{t}`"))))
            .collect::<Result<_, _>>()?;
        let [width, height] = dims[..] else {
            return Err(PfmError::Parse("expected `<width> <height>`".into()));
        };
        let scale: f32 = next_line()?.parse().map_err(|_| PfmError::Parse("bad scale".into()))?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(PfmError::Parse("scale must be finite and nonzero".into()));
        }
        let little = scale < 0.0;
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| PfmError::Parse("dimensions overflow".into()))?;
        let body = &bytes[pos..];
        if body.len() != count * 4 {
            return Err(PfmError::Parse(format!("expected {} data bytes, found {}", count * 4, body.len())));
        }
        let mut file_order: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }
            })
            .collect();
        let row_len = width * channels;
        let mut data = Vec::with_capacity(count);
        if row_len > 0 {
            for row in file_order.chunks_exact(row_len).rev() {
                data.extend_from_slice(row);
            }
        } else {
            data.append(&mut file_order);
        }
        Ok(Self { width, height, channels, data })
    }
}

/// `foo.pfm` → `foo.mask.pfm`.
pub fn mask_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.mask.pfm"))
}

pub fn mask_to_pfm(width: usize, height: usize, mask: &[bool]) -> PfmImage {
    PfmImage { width, height, channels: 1, data: mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect() }
}

pub fn pfm_to_mask(img: &PfmImage) -> Result<Vec<bool>, PfmError> {
    if img.channels != 1 {
        return Err(PfmError::Parse("mask must be single-channel".into()));
    }
    img.data
        .iter()
        .map(|&v| match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(PfmError::Parse(format!("mask value {other} is neither 0 nor 1"))),
        })
        .collect()
}

/// Writes the map's positions (as f32) and its weight mask sidecar.
pub fn write_pfm(map: &UvPositionMap, path: impl AsRef<Path>) -> Result<(), PfmError> {
    let path = path.as_ref();
    let data = PfmImage {
        width: map.width(),
        height: map.height(),
        channels: 3,
        data: map.data().iter().flat_map(|p| p.map(|c| c as f32)).collect(),
    };
    write_atomic(path, &data.encode())?;
    write_atomic(&mask_path(path), &mask_to_pfm(map.width(), map.height(), map.weights()).encode())?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<UvPositionMap, PfmError> {
    let path = path.as_ref();
    let data = PfmImage::decode(&std::fs::read(path)?)?;
    if data.channels != 3 {
        return Err(PfmError::Parse("position map must have 3 channels".into()));
    }
    let mask = PfmImage::decode(&std::fs::read(mask_path(path))?)?;
    if (mask.width, mask.height) != (data.width, data.height) {
        return Err(PfmError::DimensionMismatch(format!(
            "map is {}x{}, mask is {}x{}",
            data.width, data.height, mask.width, mask.height
        )));
    }
    let weight = pfm_to_mask(&mask)?;
    let pixels = data.data.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]).collect();
    UvPositionMap::from_parts(data.width, data.height, pixels, weight).map_err(|e| PfmError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> UvPositionMap {
        let mut m = UvPositionMap::zeros(5, 3);
        m.set(0, 0, Some([0.25, -1.5, 3.0]));
        m.set(4, 2, Some([1e-3f32 as f64, 7.0, -0.125]));
        m.set(2, 1, Some([0.0, 0.0, 0.0]));
        m
    }

    #[test]
    fn write_read_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("uv.pfm");
        let m = sample_map();
        write_pfm(&m, &p).unwrap();
        assert!(dir.path().join("uv.mask.pfm").exists());
        assert_eq!(read_pfm(&p).unwrap(), m);
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        let img = PfmImage { width: 1, height: 2, channels: 1, data: vec![1.0, 2.0] };
        let bytes = img.encode();
        let header = b"Pf\n1 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..header.len() + 4], &2.0f32.to_le_bytes());
        assert_eq!(PfmImage::decode(&bytes).unwrap(), img);
    }

    #[test]
    fn big_endian_input_is_accepted() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_be_bytes());
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        assert_eq!(PfmImage::decode(&bytes).unwrap().data, vec![0.5, 2.0]);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let mut bytes = PfmImage { width: 2, height: 2, channels: 3, data: vec![0.0; 12] }.encode();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(PfmImage::decode(&bytes), Err(PfmError::Parse(_))));
        assert!(matches!(PfmImage::decode(b"PF\n2 2"), Err(PfmError::Parse(_))));
        assert!(matches!(PfmImage::decode(b"P6\n2 2\n-1\n"), Err(PfmError::Parse(_))));
    }

    #[test]
    fn mask_of_wrong_size_is_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("uv.pfm");
        write_pfm(&sample_map(), &p).unwrap();
        std::fs::write(mask_path(&p), mask_to_pfm(4, 3, &[false; 12]).encode()).unwrap();
        assert!(matches!(read_pfm(&p), Err(PfmError::DimensionMismatch(_))));
    }

    #[test]
    fn non_binary_mask_rejected() {
        let img = PfmImage { width: 1, height: 1, channels: 1, data: vec![0.5] };
        assert!(pfm_to_mask(&img).is_err());
    }
}
