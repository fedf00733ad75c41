//! Scalar figures of merit comparing two maps over an explicit ROI.

use super::{same_grid, RealMap, Roi};
use crate::error::{Result, SsmError};
use serde::{Deserialize, Serialize};

/// Normalised overlap `⟨|a·b|⟩ / √(⟨a²⟩⟨b²⟩)` of two amplitude-like maps.
///
/// Bounded to [0, 1] by Cauchy–Schwarz; equals 1 iff |a| ∝ |b| on the ROI.
pub fn amplitude_fidelity(a: &RealMap, b: &RealMap, roi: &Roi) -> Result<f64> {
    same_grid(&a.grid, &b.grid)?;
    roi.check(&a.grid)?;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (iy, ix) in roi.indices() {
        let (u, v) = (a.values[[iy, ix]], b.values[[iy, ix]]);
        if !(u.is_finite() && v.is_finite()) {
            return Err(SsmError::UndefinedFidelity("non-finite sample".into()));
        }
        ab += (u * v).abs();
        aa += u * u;
        bb += v * v;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(SsmError::UndefinedFidelity("an input is identically zero on the ROI".into()));
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).min(1.0))
}

/// Spatial fidelity of two intensity maps: `⟨√(I·I₀)⟩ / √(⟨I⟩⟨I₀⟩)`.
pub fn overlap_fidelity(i: &RealMap, i0: &RealMap, roi: &Roi) -> Result<f64> {
    same_grid(&i.grid, &i0.grid)?;
    roi.check(&i.grid)?;
    let (mut cross, mut s, mut s0) = (0.0, 0.0, 0.0);
    for (iy, ix) in roi.indices() {
        let (u, v) = (i.values[[iy, ix]], i0.values[[iy, ix]]);
        if u < 0.0 || v < 0.0 || !(u.is_finite() && v.is_finite()) {
            return Err(SsmError::invalid(format!(
                "intensity maps must be finite and non-negative (sample {iy},{ix})"
            )));
        }
        cross += (u * v).sqrt();
        s += u;
        s0 += v;
    }
    if s == 0.0 || s0 == 0.0 {
        return Err(SsmError::UndefinedFidelity("an intensity map is zero on the ROI".into()));
    }
    Ok((cross / (s.sqrt() * s0.sqrt())).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub eta: f64,
    /// Set when η > 1, i.e. the modulated map carries more energy.
    pub gained_energy: bool,
}

/// Energy ratio `η = ΣI / ΣI₀` over the ROI.
pub fn efficiency(i: &RealMap, i0: &RealMap, roi: &Roi) -> Result<Efficiency> {
    same_grid(&i.grid, &i0.grid)?;
    roi.check(&i.grid)?;
    let s0 = i0.sum_in(roi);
    if s0 == 0.0 || !s0.is_finite() {
        return Err(SsmError::invalid("reference energy is zero"));
    }
    let eta = i.sum_in(roi) / s0;
    let gained_energy = eta > 1.0;
    if gained_energy {
        log::warn!("efficiency {eta:.4} exceeds 1: modulated map gained energy");
    }
    Ok(Efficiency { eta, gained_energy })
}
