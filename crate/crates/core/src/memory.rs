//! Phenomenological quantum-memory model.
//!
//! The stored spin-wave is a transverse complex envelope plus a stack of
//! longitudinal slices per y row carrying the accumulated SSM phase. The
//! spin-wave carrier K_sw is taken as zero: everything is expressed in the
//! frame of the readout optical carrier. Readout averages the slice phasors,
//! which is where longitudinal intensity noise turns into amplitude loss.

use crate::error::{Result, SsmError};
use crate::field::ComplexField;
use crate::ssm::{IntensityRealization, SsmPulse};
use num_complex::Complex64;

/// Default number of longitudinal slices.
pub const DEFAULT_SLICES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinWaveState {
    pub transverse: ComplexField,
    /// Accumulated phase, row-major `ny × nz`.
    pub slice_phases: Vec<f64>,
    pub nz: usize,
    /// Fraction of the stored excitation not yet read out.
    pub population: f64,
}

impl SpinWaveState {
    pub fn ny(&self) -> usize {
        self.transverse.grid.ny
    }

    pub fn row_phases(&self, iy: usize) -> &[f64] {
        &self.slice_phases[iy * self.nz..(iy + 1) * self.nz]
    }

    /// Slice-averaged phasor `(1/Nz) Σ_z exp(iφ(y, z))` for each row.
    pub fn row_coherence(&self) -> Vec<Complex64> {
        (0..self.ny())
            .map(|iy| {
                let row = self.row_phases(iy);
                if row.iter().all(|&p| p == row[0]) {
                    return Complex64::from_polar(1.0, row[0]);
                }
                let s: Complex64 = row.iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
                s / self.nz as f64
            })
            .collect()
    }
}

/// Map a signal field onto a fresh spin-wave with [`DEFAULT_SLICES`] slices.
pub fn write_in(signal: &ComplexField) -> SpinWaveState {
    write_in_with_slices(signal, DEFAULT_SLICES)
}

pub fn write_in_with_slices(signal: &ComplexField, nz: usize) -> SpinWaveState {
    SpinWaveState {
        transverse: signal.clone(),
        slice_phases: vec![0.0; signal.grid.ny * nz],
        nz,
        population: 1.0,
    }
}

/// Imprint `sign·α·T·I(y, z)` onto every slice. Pulses accumulate.
pub fn apply_ssm(state: &SpinWaveState, pulse: &SsmPulse, realization: &IntensityRealization) -> Result<SpinWaveState> {
    pulse.validate()?;
    if realization.ny != state.ny() || realization.nz != state.nz {
        return Err(SsmError::ShapeMismatch(format!(
            "realization {}x{} vs state {}x{}",
            realization.ny,
            realization.nz,
            state.ny(),
            state.nz
        )));
    }
    let s = pulse.phase_per_intensity();
    let mut next = state.clone();
    for (p, i) in next.slice_phases.iter_mut().zip(&realization.values) {
        *p += s * i;
    }
    Ok(next)
}

/// Convert `fraction` of the stored excitation back into light.
///
/// Returns the readout field and the depleted state; slice phases persist
/// so later readouts see every pulse applied so far.
pub fn readout(state: &SpinWaveState, fraction: f64) -> Result<(ComplexField, SpinWaveState)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SsmError::invalid(format!("readout fraction must be in (0, 1], got {fraction}")));
    }
    if fraction > state.population + 1e-12 {
        return Err(SsmError::InsufficientPopulation {
            requested: fraction,
            remaining: state.population,
        });
    }
    let amp = fraction.sqrt();
    let factors: Vec<Complex64> = state.row_coherence().into_iter().map(|c| c * amp).collect();
    let mut field = state.transverse.clone();
    field.multiply_rows(&factors)?;
    let mut next = state.clone();
    next.population = (state.population - fraction).max(0.0);
    Ok((field, next))
}

/// Flat storage loss: scale the envelope by `factor_per_us^elapsed_us`.
/// A factor of 1 (the default everywhere) is lossless.
pub fn store(state: &SpinWaveState, elapsed_us: f64, factor_per_us: f64) -> Result<SpinWaveState> {
    if !(factor_per_us > 0.0 && factor_per_us <= 1.0) || !(elapsed_us >= 0.0) {
        return Err(SsmError::invalid("storage factor must be in (0, 1] and elapsed time >= 0"));
    }
    let mut next = state.clone();
    if factor_per_us != 1.0 {
        let s = factor_per_us.powf(elapsed_us);
        next.transverse.values.mapv_inplace(|c| c * s);
    }
    Ok(next)
}
