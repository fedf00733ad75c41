//! Two readouts on one frame, separated in k-space.

use super::filter::{locate_sideband, AnalyticSignal, FilterWindow, FringeAnalyzer};
use super::synth::CameraFrame;
use crate::error::{Result, SsmError};
use crate::field::{unwrap_1d, wrap_phase};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Spectral axis along which the second readout was shifted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitAxis {
    X,
    Y,
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub window_1: FilterWindow,
    pub window_2: FilterWindow,
    pub stack_1: Vec<AnalyticSignal>,
    pub stack_2: Vec<AnalyticSignal>,
    /// Peak-to-peak distance of the two sidebands along the split axis.
    pub separation_bins: f64,
}

/// Closest a sideband peak may sit to the boundary.
const MIN_BOUNDARY_GAP: f64 = 3.0;

/// The two windows of a split readout, located on one frame.
#[derive(Debug, Clone)]
pub struct SplitWindows {
    /// Shares the FFT plan; its own window is the unsplit sideband.
    pub analyzer: FringeAnalyzer,
    pub window_1: FilterWindow,
    pub window_2: FilterWindow,
    /// Peak-to-peak distance of the two sidebands along the split axis.
    pub separation_bins: f64,
}

impl SplitWindows {
    /// Filter one frame with both windows from a single transform.
    pub fn filter(&self, frame: &CameraFrame) -> Result<(AnalyticSignal, AnalyticSignal)> {
        let mut p = self.analyzer.filter_windows(frame, &[self.window_1, self.window_2])?;
        let second = p.pop().expect("two windows");
        let first = p.pop().expect("two windows");
        Ok((first, second))
    }
}

/// Locate the readout below `boundary_k` (side 1) and the one above it
/// (side 2) along `axis` on `frame`.
///
/// Each window extends from its peak towards the boundary (minus one bin)
/// and equally far on the other side; across the axis it spans half the
/// carrier magnitude.
pub fn split_windows(frame: &CameraFrame, k0: (f64, f64), axis: SplitAxis, boundary_k: f64) -> Result<SplitWindows> {
    let grid = frame.grid;
    let base = FringeAnalyzer::new(grid, FilterWindow::around_peak(&grid, bin_of(&grid, k0))?)?;
    let spec = base.spectrum(frame)?;

    let (dk, n) = match axis {
        SplitAxis::X => (grid.dk_x(), grid.nx),
        SplitAxis::Y => (grid.dk_y(), grid.ny),
    };
    let boundary = boundary_k / dk + (n / 2) as f64;
    let along = |p: (usize, usize)| match axis {
        SplitAxis::X => p.0 as f64,
        SplitAxis::Y => p.1 as f64,
    };

    // Search each half-box separately by masking the other side.
    let search = |side: f64| -> Result<(usize, usize)> {
        let mut masked = spec.clone();
        for ((iy, ix), v) in masked.indexed_iter_mut() {
            let c = along((ix, iy));
            if (c - boundary) * side < 0.0 {
                *v = num_complex::Complex64::new(0.0, 0.0);
            }
        }
        locate_sideband(&masked, &grid, k0)
    };
    let p1 = search(-1.0)?;
    let p2 = search(1.0)?;
    let (d1, d2) = (boundary - along(p1), along(p2) - boundary);
    let separation_bins = along(p2) - along(p1);
    if d1 < MIN_BOUNDARY_GAP || d2 < MIN_BOUNDARY_GAP {
        return Err(SsmError::SidebandOverlap { separation_bins });
    }
    let h_along = (d1.min(d2).floor() as usize).saturating_sub(1).max(1);
    let h_across = match axis {
        SplitAxis::X => base.window.hy,
        SplitAxis::Y => base.window.hx,
    };
    let make = |p: (usize, usize)| {
        let (hx, hy) = match axis {
            SplitAxis::X => (h_along, h_across),
            SplitAxis::Y => (h_across, h_along),
        };
        let w = FilterWindow { cx: p.0, cy: p.1, hx, hy };
        w.check(&grid).map(|_| w)
    };
    let (window_1, window_2) = (make(p1)?, make(p2)?);
    Ok(SplitWindows {
        analyzer: base,
        window_1,
        window_2,
        separation_bins,
    })
}

/// [`split_windows`] on the first frame, then both windows applied to
/// every frame.
pub fn split_readout_separate(
    frames: &[CameraFrame],
    k0: (f64, f64),
    axis: SplitAxis,
    boundary_k: f64,
) -> Result<SplitResult> {
    let first = frames.first().ok_or_else(|| SsmError::invalid("empty frame stack"))?;
    let sw = split_windows(first, k0, axis, boundary_k)?;
    let pairs: Vec<(AnalyticSignal, AnalyticSignal)> = frames.par_iter().map(|f| sw.filter(f)).collect::<Result<_>>()?;
    let (stack_1, stack_2) = pairs.into_iter().unzip();
    Ok(SplitResult {
        window_1: sw.window_1,
        window_2: sw.window_2,
        stack_1,
        stack_2,
        separation_bins: sw.separation_bins,
    })
}

fn bin_of(grid: &crate::field::Grid2D, k: (f64, f64)) -> (usize, usize) {
    let bx = (k.0 / grid.dk_x()).round() as i64 + (grid.nx / 2) as i64;
    let by = (k.1 / grid.dk_y()).round() as i64 + (grid.ny / 2) as i64;
    (bx.clamp(0, grid.nx as i64 - 1) as usize, by.clamp(0, grid.ny as i64 - 1) as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPhiStats {
    /// Unwrapped Φ₁ − Φ₂.
    pub delta: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub window: usize,
    /// Rolling statistics; entry i covers frames `i..i+window`.
    pub rolling_mean: Vec<f64>,
    pub rolling_std: Vec<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Statistics of the phase difference between two readouts.
pub fn delta_phi_stats(phi_1: &[f64], phi_2: &[f64], window: usize) -> Result<DeltaPhiStats> {
    if phi_1.len() != phi_2.len() {
        return Err(SsmError::ShapeMismatch(format!(
            "phase series of length {} and {}",
            phi_1.len(),
            phi_2.len()
        )));
    }
    if phi_1.is_empty() || window == 0 || window > phi_1.len() {
        return Err(SsmError::invalid(format!(
            "rolling window {window} needs 1..={} frames",
            phi_1.len()
        )));
    }
    let wrapped: Vec<f64> = phi_1.iter().zip(phi_2).map(|(a, b)| wrap_phase(a - b)).collect();
    let delta = unwrap_1d(&wrapped);
    let (mean, std) = mean_std(&delta);
    let (rolling_mean, rolling_std) = delta.windows(window).map(mean_std).unzip();
    Ok(DeltaPhiStats {
        delta,
        mean,
        std,
        window,
        rolling_mean,
        rolling_std,
    })
}
