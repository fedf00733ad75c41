//! Centred, unitary 2D discrete Fourier transforms.
//!
//! Normalisation is unitary: each axis carries a factor 1/√n, so
//! `Σ|in|² = Σ|out|²` holds sample-for-sample and the inverse uses the same
//! factor. The zero-frequency sample lands at index `(ny/2, nx/2)`; output
//! sample `(iy, ix)` corresponds to angular frequency `(grid.kx(ix), grid.ky(iy))`.

use super::{ComplexField, Grid2D};
use crate::error::{Result, SsmError};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Reusable forward/inverse plans for one grid size.
#[derive(Clone)]
pub struct Fft2Plan {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2Plan").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Fft2Plan {
    pub fn new(grid: &Grid2D) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Fft2Plan {
            nx: grid.nx,
            ny: grid.ny,
            fwd_x: planner.plan_fft_forward(grid.nx),
            fwd_y: planner.plan_fft_forward(grid.ny),
            inv_x: planner.plan_fft_inverse(grid.nx),
            inv_y: planner.plan_fft_inverse(grid.ny),
        })
    }

    fn check(&self, a: &Array2<Complex64>) -> Result<()> {
        if a.dim() != (self.ny, self.nx) {
            return Err(SsmError::ShapeMismatch(format!(
                "array {:?} vs plan ({}, {})",
                a.dim(),
                self.ny,
                self.nx
            )));
        }
        Ok(())
    }

    /// In-place centred forward transform.
    pub fn forward(&self, a: &mut Array2<Complex64>) -> Result<()> {
        self.check(a)?;
        roll_half(a);
        self.transform(a, &self.fwd_x, &self.fwd_y);
        roll_half(a);
        Ok(())
    }

    /// In-place centred inverse transform.
    pub fn inverse(&self, a: &mut Array2<Complex64>) -> Result<()> {
        self.check(a)?;
        roll_half(a);
        self.transform(a, &self.inv_x, &self.inv_y);
        roll_half(a);
        Ok(())
    }

    fn transform(&self, a: &mut Array2<Complex64>, fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        let (ny, nx) = (self.ny, self.nx);
        if !a.is_standard_layout() {
            *a = a.as_standard_layout().to_owned();
        }
        let buf = a.as_slice_mut().expect("standard layout");
        fx.process(buf);

        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                t[ix * ny + iy] = buf[iy * nx + ix];
            }
        }
        fy.process(&mut t);
        let norm = 1.0 / ((nx * ny) as f64).sqrt();
        for iy in 0..ny {
            for ix in 0..nx {
                buf[iy * nx + ix] = t[ix * ny + iy] * norm;
            }
        }
    }
}

/// Swap diagonal quadrants; for even sizes this is both fftshift and ifftshift.
fn roll_half(a: &mut Array2<Complex64>) {
    let (ny, nx) = a.dim();
    let (hy, hx) = (ny / 2, nx / 2);
    for iy in 0..hy {
        for ix in 0..nx {
            let jx = (ix + hx) % nx;
            let tmp = a[[iy, ix]];
            a[[iy, ix]] = a[[iy + hy, jx]];
            a[[iy + hy, jx]] = tmp;
        }
    }
}

/// Centred forward transform onto the spectral grid.
pub fn fft2_centered(field: &ComplexField) -> Result<ComplexField> {
    let plan = Fft2Plan::new(&field.grid)?;
    let mut values = field.values.clone();
    plan.forward(&mut values)?;
    Ok(ComplexField {
        grid: field.grid.spectral(),
        values,
    })
}

/// Inverse of [`fft2_centered`]: takes a spectrum and returns the field on
/// `spatial` (the grid the spectrum was produced from).
pub fn ifft2_centered(spectrum: &ComplexField, spatial: &Grid2D) -> Result<ComplexField> {
    if spectrum.grid.shape() != spatial.shape() {
        return Err(SsmError::ShapeMismatch("spectrum and spatial grid sizes differ".into()));
    }
    let plan = Fft2Plan::new(spatial)?;
    let mut values = spectrum.values.clone();
    plan.inverse(&mut values)?;
    Ok(ComplexField {
        grid: *spatial,
        values,
    })
}
