//! Raw float32 rasters with a JSON sidecar.
//!
//! `<stem>.f32` holds row-major little-endian float32 samples (complex maps
//! interleave re, im); `<stem>.json` holds [`MapMeta`].

use super::{ComplexField, Grid2D, RealMap};
use crate::error::{Result, SsmError};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub nx: usize,
    pub ny: usize,
    pub pitch_x_um: f64,
    pub pitch_y_um: f64,
    pub kind: MapKind,
    pub units: String,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("f32"), stem.with_extension("json"))
}

/// Write a raw raster of `nx·ny` (real) or `2·nx·ny` (complex) floats.
pub fn write_raw(stem: &Path, meta: &MapMeta, samples: impl Iterator<Item = f64>) -> Result<()> {
    let (data, side) = paths(stem);
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir)?;
    }
    let bytes: Vec<u8> = samples.flat_map(|v| (v as f32).to_le_bytes()).collect();
    let per = if meta.kind == MapKind::Complex { 2 } else { 1 };
    if bytes.len() != 4 * per * meta.nx * meta.ny {
        return Err(SsmError::ShapeMismatch(format!(
            "{} bytes for a {}x{} {:?} map",
            bytes.len(),
            meta.nx,
            meta.ny,
            meta.kind
        )));
    }
    fs::write(data, bytes)?;
    fs::write(side, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

fn read_raw(stem: &Path) -> Result<(MapMeta, Vec<f32>)> {
    let (data, side) = paths(stem);
    let meta: MapMeta = serde_json::from_str(&fs::read_to_string(side)?)?;
    let bytes = fs::read(data)?;
    let per = if meta.kind == MapKind::Complex { 2 } else { 1 };
    if bytes.len() != 4 * per * meta.nx * meta.ny {
        return Err(SsmError::ShapeMismatch(format!(
            "{}: {} bytes, sidecar says {}x{} {:?}",
            stem.display(),
            bytes.len(),
            meta.nx,
            meta.ny,
            meta.kind
        )));
    }
    let vals = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((meta, vals))
}

fn meta_for(grid: &Grid2D, kind: MapKind, units: &str) -> MapMeta {
    MapMeta {
        nx: grid.nx,
        ny: grid.ny,
        pitch_x_um: grid.pitch_x,
        pitch_y_um: grid.pitch_y,
        kind,
        units: units.to_string(),
    }
}

pub fn write_real_map(stem: &Path, map: &RealMap, units: &str) -> Result<()> {
    let meta = meta_for(&map.grid, MapKind::Real, units);
    write_raw(stem, &meta, map.values.iter().copied())
}

pub fn write_complex_field(stem: &Path, field: &ComplexField, units: &str) -> Result<()> {
    let meta = meta_for(&field.grid, MapKind::Complex, units);
    write_raw(stem, &meta, field.values.iter().flat_map(|c| [c.re, c.im]))
}

pub fn read_real_map(stem: &Path) -> Result<(RealMap, String)> {
    let (meta, vals) = read_raw(stem)?;
    if meta.kind != MapKind::Real {
        return Err(SsmError::invalid(format!("{} is not a real map", stem.display())));
    }
    let grid = Grid2D::new(meta.nx, meta.ny, meta.pitch_x_um, meta.pitch_y_um)?;
    let values = Array2::from_shape_vec(grid.shape(), vals.into_iter().map(f64::from).collect())
        .map_err(|e| SsmError::ShapeMismatch(e.to_string()))?;
    Ok((RealMap { grid, values }, meta.units))
}

pub fn read_complex_field(stem: &Path) -> Result<(ComplexField, String)> {
    let (meta, vals) = read_raw(stem)?;
    if meta.kind != MapKind::Complex {
        return Err(SsmError::invalid(format!("{} is not a complex map", stem.display())));
    }
    let grid = Grid2D::new(meta.nx, meta.ny, meta.pitch_x_um, meta.pitch_y_um)?;
    let cs = vals
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0] as f64, c[1] as f64))
        .collect();
    let values = Array2::from_shape_vec(grid.shape(), cs).map_err(|e| SsmError::ShapeMismatch(e.to_string()))?;
    Ok((ComplexField { grid, values }, meta.units))
}
