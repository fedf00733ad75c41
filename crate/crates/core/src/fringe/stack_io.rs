//! Frame stacks on disk: `frame_%06d.u16` rasters (little-endian, row-major)
//! plus a `manifest.json` describing the run.

use super::synth::{CameraFrame, CameraModel, ReferenceBeam};
use crate::error::{Result, SsmError};
use crate::field::Grid2D;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceManifest {
    pub tilt_kx: f64,
    pub tilt_ky: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub nx: usize,
    pub ny: usize,
    pub pitch_um: f64,
    pub n_frames: usize,
    pub seed: u64,
    pub reference: ReferenceManifest,
    pub camera: CameraModel,
}

impl StackManifest {
    pub fn new(grid: &Grid2D, n_frames: usize, seed: u64, reference: &ReferenceBeam, camera: &CameraModel) -> Self {
        StackManifest {
            nx: grid.nx,
            ny: grid.ny,
            pitch_um: grid.pitch_x,
            n_frames,
            seed,
            reference: ReferenceManifest {
                tilt_kx: reference.tilt_kx,
                tilt_ky: reference.tilt_ky,
                power: reference.power,
            },
            camera: *camera,
        }
    }
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:06}.u16")
}

pub fn write_stack(dir: &Path, manifest: &StackManifest, frames: &[CameraFrame]) -> Result<()> {
    if manifest.n_frames != frames.len() {
        return Err(SsmError::invalid(format!(
            "manifest lists {} frames, got {}",
            manifest.n_frames,
            frames.len()
        )));
    }
    fs::create_dir_all(dir)?;
    for (i, f) in frames.iter().enumerate() {
        if f.counts.dim() != (manifest.ny, manifest.nx) {
            return Err(SsmError::ShapeMismatch(format!("frame {i} is {:?}", f.counts.dim())));
        }
        let mut w = BufWriter::new(fs::File::create(dir.join(frame_name(i)))?);
        for c in f.counts.iter() {
            w.write_all(&c.to_le_bytes())?;
        }
        w.flush()?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_stack(dir: &Path) -> Result<(StackManifest, Vec<CameraFrame>)> {
    let manifest: StackManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let grid = Grid2D::new(manifest.nx, manifest.ny, manifest.pitch_um, manifest.pitch_um)?;
    let mut frames = Vec::with_capacity(manifest.n_frames);
    for i in 0..manifest.n_frames {
        let bytes = fs::read(dir.join(frame_name(i)))?;
        if bytes.len() != 2 * grid.len() {
            return Err(SsmError::ShapeMismatch(format!(
                "{} holds {} bytes, expected {}",
                frame_name(i),
                bytes.len(),
                2 * grid.len()
            )));
        }
        let data: Vec<u16> = bytes.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect();
        let counts = Array2::from_shape_vec(grid.shape(), data).expect("length checked");
        let max = manifest.camera.max_count();
        let saturated = counts.iter().filter(|&&c| c >= max).count();
        frames.push(CameraFrame {
            grid,
            counts,
            frame_index: i,
            timestamp: i as f64 / manifest.camera.frame_rate_hz,
            saturated,
        });
    }
    Ok((manifest, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ComplexField;
    use crate::fringe::synth::Interferometer;
    use num_complex::Complex64;

    #[test]
    fn stack_round_trip() {
        let g = Grid2D::square(32, 3.25).unwrap();
        let r = ReferenceBeam::default();
        let cam = CameraModel::default();
        let ifm = Interferometer::new(g, r, cam).unwrap();
        let a = ComplexField::from_fn(g, |x, _| Complex64::new(2.0 + 0.01 * x, 0.0));
        let frames: Vec<_> = (0..3).map(|t| ifm.frame(&[(&a, 0.2 * t as f64)], 5, t).unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        let m = StackManifest::new(&g, 3, 5, &r, &cam);
        write_stack(dir.path(), &m, &frames).unwrap();
        assert!(dir.path().join("frame_000002.u16").exists());
        let (m2, back) = read_stack(dir.path()).unwrap();
        assert_eq!(m, m2);
        for (a, b) in frames.iter().zip(&back) {
            assert_eq!(a.counts, b.counts);
            assert_eq!(a.timestamp, b.timestamp);
        }
        assert!(write_stack(dir.path(), &StackManifest { n_frames: 2, ..m }, &frames).is_err());
    }
}
