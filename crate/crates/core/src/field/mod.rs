//! Sampled transverse fields on a uniform, origin-centred grid.
//!
//! Arrays are stored row-major with shape `(ny, nx)`: the first index walks
//! `y`, the second walks `x`. Sample `(ny/2, nx/2)` sits at the origin.

mod fft;
mod gauss;
pub mod io;
mod merit;

pub use fft::{fft2_centered, ifft2_centered, Fft2Plan};
pub use gauss::{fit_gaussian_1d, GaussianFit1D, fit_gaussian_2d, fit_gaussian_2d_in, gaussian_field, roi_from_readout, roi_from_readout_in, GaussianFit2D};
pub use merit::{amplitude_fidelity, efficiency, overlap_fidelity, Efficiency};

use crate::error::{Result, SsmError};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform 2D sampling grid centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    /// Sample spacing along x (µm, or the conjugate unit for spectral grids).
    pub pitch_x: f64,
    pub pitch_y: f64,
}

impl Default for Grid2D {
    /// 512 × 512 at the 3.25 µm camera pixel pitch.
    fn default() -> Self {
        Grid2D {
            nx: 512,
            ny: 512,
            pitch_x: 3.25,
            pitch_y: 3.25,
        }
    }
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, pitch_x: f64, pitch_y: f64) -> Result<Self> {
        let g = Grid2D {
            nx,
            ny,
            pitch_x,
            pitch_y,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(SsmError::InvalidGrid(format!(
                    "{name} = {n}: sample counts must be even and at least 8"
                )));
            }
        }
        for (name, p) in [("pitch_x", self.pitch_x), ("pitch_y", self.pitch_y)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(SsmError::InvalidGrid(format!("{name} = {p}: pitch must be positive")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.pitch_x
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.pitch_y
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Fractional sample index of coordinate `x`.
    pub fn fx(&self, x: f64) -> f64 {
        x / self.pitch_x + (self.nx / 2) as f64
    }

    pub fn fy(&self, y: f64) -> f64 {
        y / self.pitch_y + (self.ny / 2) as f64
    }

    /// Whether `(x, y)` lies within the sampled extent.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let fx = self.fx(x);
        let fy = self.fy(y);
        fx >= 0.0 && fx <= (self.nx - 1) as f64 && fy >= 0.0 && fy <= (self.ny - 1) as f64
    }

    /// Angular-frequency spacing of the centred DFT, rad per length unit.
    pub fn dk_x(&self) -> f64 {
        2.0 * PI / (self.nx as f64 * self.pitch_x)
    }

    pub fn dk_y(&self) -> f64 {
        2.0 * PI / (self.ny as f64 * self.pitch_y)
    }

    pub fn kx(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.dk_x()
    }

    pub fn ky(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dk_y()
    }

    /// The conjugate grid holding a centred spectrum of this grid.
    pub fn spectral(&self) -> Grid2D {
        Grid2D {
            nx: self.nx,
            ny: self.ny,
            pitch_x: self.dk_x(),
            pitch_y: self.dk_y(),
        }
    }

    pub fn full_roi(&self) -> Roi {
        Roi {
            x0: 0,
            x1: self.nx,
            y0: 0,
            y1: self.ny,
        }
    }
}

/// Rectangular region of interest as half-open index ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl Roi {
    pub fn new(x0: usize, x1: usize, y0: usize, y1: usize) -> Result<Self> {
        if x1 <= x0 || y1 <= y0 {
            return Err(SsmError::invalid(format!(
                "empty ROI x[{x0},{x1}) y[{y0},{y1})"
            )));
        }
        Ok(Roi { x0, x1, y0, y1 })
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fits(&self, grid: &Grid2D) -> bool {
        self.x1 <= grid.nx && self.y1 <= grid.ny && self.x0 < self.x1 && self.y0 < self.y1
    }

    pub(crate) fn check(&self, grid: &Grid2D) -> Result<()> {
        if self.fits(grid) {
            Ok(())
        } else {
            Err(SsmError::ShapeMismatch(format!(
                "ROI {self:?} does not fit a {}x{} grid",
                grid.nx, grid.ny
            )))
        }
    }

    /// `(iy, ix)` pairs in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y1).flat_map(move |iy| (self.x0..self.x1).map(move |ix| (iy, ix)))
    }
}

/// Complex amplitude sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub values: Array2<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid2D, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(SsmError::ShapeMismatch(format!(
                "values {:?} vs grid {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        ComplexField {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(iy, ix)| f(grid.x(ix), grid.y(iy)));
        ComplexField { grid, values }
    }

    pub fn intensity(&self) -> RealMap {
        RealMap {
            grid: self.grid,
            values: self.values.mapv(|c| c.norm_sqr()),
        }
    }

    pub fn amplitude(&self) -> RealMap {
        RealMap {
            grid: self.grid,
            values: self.values.mapv(|c| c.norm()),
        }
    }

    pub fn phase(&self) -> RealMap {
        RealMap {
            grid: self.grid,
            values: self.values.mapv(|c| c.arg()),
        }
    }

    /// Sum of |value|² over all samples (no area element).
    pub fn total_intensity(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.mapv(|c| c * s),
        }
    }

    /// Multiply every row `iy` by `factors[iy]`.
    pub fn multiply_rows(&mut self, factors: &[Complex64]) -> Result<()> {
        if factors.len() != self.grid.ny {
            return Err(SsmError::ShapeMismatch(format!(
                "{} row factors for {} rows",
                factors.len(),
                self.grid.ny
            )));
        }
        for (mut row, f) in self.values.rows_mut().into_iter().zip(factors) {
            row.mapv_inplace(|c| c * f);
        }
        Ok(())
    }
}

/// Real scalar map sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    pub grid: Grid2D,
    pub values: Array2<f64>,
}

impl RealMap {
    pub fn new(grid: Grid2D, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(SsmError::ShapeMismatch(format!(
                "values {:?} vs grid {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        Ok(RealMap { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        RealMap {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(iy, ix)| f(grid.x(ix), grid.y(iy)));
        RealMap { grid, values }
    }

    pub fn sum_in(&self, roi: &Roi) -> f64 {
        roi.indices().map(|(iy, ix)| self.values[[iy, ix]]).sum()
    }

    /// Mean over `x` within the ROI, one value per ROI row.
    pub fn x_average(&self, roi: &Roi) -> Vec<f64> {
        (roi.y0..roi.y1)
            .map(|iy| {
                let s: f64 = (roi.x0..roi.x1).map(|ix| self.values[[iy, ix]]).sum();
                s / roi.width() as f64
            })
            .collect()
    }

    /// Sum over `x` of every row (full frame).
    pub fn y_marginal(&self) -> Vec<f64> {
        self.values.rows().into_iter().map(|r| r.sum()).collect()
    }
}

pub(crate) fn same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a != b {
        return Err(SsmError::ShapeMismatch(format!("grids differ: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// Wrap an angle into (−π, π].
pub fn wrap_phase(p: f64) -> f64 {
    let w = (p + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// 1D unwrapping: remove 2π jumps between consecutive samples.
pub fn unwrap_1d(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            offset -= 2.0 * PI * ((p - phases[i - 1]) / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}
