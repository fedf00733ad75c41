//! Phase, decoherence and focal-length estimates from analytic signals.

use super::filter::AnalyticSignal;
use crate::error::{Result, SsmError};
use crate::field::{same_grid, unwrap_1d, wrap_phase, Grid2D, RealMap, Roi};
use crate::fit::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::ssm::wavenumber;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Reference amplitude below this fraction of its ROI maximum counts as weak.
    pub amplitude_floor: f64,
    /// Unwrap the x-averaged profile along y.
    pub unwrap_profile: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            amplitude_floor: 0.05,
            unwrap_profile: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseExtraction {
    /// Wrapped phase on the ROI, zero elsewhere.
    pub phase: RealMap,
    pub roi: Roi,
    /// x-averaged phase per ROI row (rows `roi.y0..roi.y1`).
    pub profile: Vec<f64>,
    /// Fraction of the ROI where the reference run is weak.
    pub weak_fraction: f64,
    pub low_confidence: bool,
}

/// `φ = arg(modulated · conj(reference))` on the ROI.
pub fn extract_phase(
    modulated: &AnalyticSignal,
    reference: &AnalyticSignal,
    roi: &Roi,
    opts: &ExtractOptions,
) -> Result<PhaseExtraction> {
    same_grid(&modulated.grid, &reference.grid)?;
    if modulated.window != reference.window {
        return Err(SsmError::ShapeMismatch("runs were filtered with different windows".into()));
    }
    roi.check(&modulated.grid)?;
    let (m, r) = (modulated.field(), reference.field());
    let mut phase = RealMap::zeros(modulated.grid);
    let peak = roi.indices().map(|(iy, ix)| r.values[[iy, ix]].norm()).fold(0.0, f64::max);
    let mut weak = 0usize;
    for (iy, ix) in roi.indices() {
        let rv = r.values[[iy, ix]];
        if rv.norm() < opts.amplitude_floor * peak {
            weak += 1;
        }
        phase.values[[iy, ix]] = (m.values[[iy, ix]] * rv.conj()).arg();
    }
    let weak_fraction = weak as f64 / roi.len() as f64;
    let low_confidence = weak_fraction > 0.1;
    if low_confidence {
        log::warn!("reference amplitude weak on {:.1}% of the ROI", 100.0 * weak_fraction);
    }
    let mut profile = row_profile(&phase, roi)?;
    if opts.unwrap_profile {
        profile = unwrap_1d(&profile);
    }
    Ok(PhaseExtraction {
        phase,
        roi: *roi,
        profile,
        weak_fraction,
        low_confidence,
    })
}

/// Circular mean of the phase along x for each ROI row.
pub fn row_profile(phase: &RealMap, roi: &Roi) -> Result<Vec<f64>> {
    roi.check(&phase.grid)?;
    Ok((roi.y0..roi.y1)
        .map(|iy| {
            let s: Complex64 = (roi.x0..roi.x1).map(|ix| Complex64::from_polar(1.0, phase.values[[iy, ix]])).sum();
            s.arg()
        })
        .collect())
}

/// Normalised overlap of a measured phase with its target after removing
/// the best global offset. Both slices hold the same samples.
pub fn phase_fidelity(measured: &[f64], target: &[f64]) -> Result<f64> {
    if measured.len() != target.len() || measured.is_empty() {
        return Err(SsmError::ShapeMismatch(format!(
            "{} measured vs {} target samples",
            measured.len(),
            target.len()
        )));
    }
    let c = measured
        .iter()
        .zip(target)
        .map(|(m, t)| Complex64::from_polar(1.0, m - t))
        .sum::<Complex64>()
        .arg();
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (m, t) in measured.iter().zip(target) {
        let aligned = t + wrap_phase(m - c - t);
        ab += (aligned * t).abs();
        aa += aligned * aligned;
        bb += t * t;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(SsmError::UndefinedFidelity("phase identically zero".into()));
    }
    Ok((ab / (aa * bb).sqrt()).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceMap {
    /// `½·log(h₀/h)` on valid ROI pixels, NaN elsewhere.
    pub gamma: RealMap,
    pub roi: Roi,
    pub excluded_fraction: f64,
}

/// Decoherence factor per pixel. Pixels where either map is at or below
/// `floor` are excluded; more than 30 % exclusion is an error.
pub fn decoherence_map(h: &RealMap, h0: &RealMap, roi: &Roi, floor: f64) -> Result<DecoherenceMap> {
    same_grid(&h.grid, &h0.grid)?;
    roi.check(&h.grid)?;
    let mut gamma = RealMap::from_fn(h.grid, |_, _| f64::NAN);
    let mut excluded = 0usize;
    for (iy, ix) in roi.indices() {
        let (a, b) = (h.values[[iy, ix]], h0.values[[iy, ix]]);
        if a > floor && b > floor && a.is_finite() && b.is_finite() {
            gamma.values[[iy, ix]] = 0.5 * (b / a).ln();
        } else {
            excluded += 1;
        }
    }
    let excluded_fraction = excluded as f64 / roi.len() as f64;
    if excluded_fraction > 0.3 {
        return Err(SsmError::ExcessiveExclusion {
            fraction: excluded_fraction,
        });
    }
    Ok(DecoherenceMap {
        gamma,
        roi: *roi,
        excluded_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub gamma_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub n_rows: usize,
}

/// Straight-line fit of the x-averaged decoherence factor against `φ(y)²`.
/// `phase` holds one value per ROI row; rows with fewer than half their
/// pixels valid are skipped.
pub fn fit_gamma(map: &DecoherenceMap, phase: &[f64]) -> Result<GammaFit> {
    let roi = map.roi;
    if phase.len() != roi.height() {
        return Err(SsmError::ShapeMismatch(format!(
            "{} phase rows for an ROI of height {}",
            phase.len(),
            roi.height()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, iy) in (roi.y0..roi.y1).enumerate() {
        let vals: Vec<f64> = (roi.x0..roi.x1)
            .map(|ix| map.gamma.values[[iy, ix]])
            .filter(|v| v.is_finite())
            .collect();
        if 2 * vals.len() < roi.width() {
            continue;
        }
        xs.push(phase[row] * phase[row]);
        ys.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    let n = xs.len();
    if n < 3 {
        return Err(SsmError::fit(format!("only {n} usable rows for the decoherence fit")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(SsmError::fit("imposed phase does not vary over the ROI"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let gamma = sxy / sxx;
    let intercept = my - gamma * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - gamma * x).powi(2)).sum();
    let s2 = rss / (nf - 2.0);
    let gamma_err = (s2 / sxx).sqrt();
    let intercept_err = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    Ok(GammaFit {
        gamma,
        gamma_err,
        intercept,
        intercept_err,
        n_rows: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaOptions {
    pub wavelength_nm: f64,
    /// Shortest focal length searched.
    pub min_focal_mm: f64,
    /// Longer focal lengths are reported as no curvature.
    pub max_focal_mm: f64,
}

impl Default for ParabolaOptions {
    fn default() -> Self {
        ParabolaOptions {
            wavelength_nm: 780.0,
            min_focal_mm: 20.0,
            max_focal_mm: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFit {
    /// Infinite when no curvature was detected.
    pub focal_mm: f64,
    pub focal_err_mm: f64,
    /// Vertex position (µm).
    pub y0_um: f64,
    pub offset: f64,
    /// |⟨e^{i(φ − model)}⟩| over the ROI, 1 for a perfect fit.
    pub coherence: f64,
    pub curvature_detected: bool,
}

impl ParabolaFit {
    /// The fitted model evaluated at `y`.
    pub fn phase_at(&self, y: f64, wavelength_nm: f64) -> f64 {
        if self.curvature_detected {
            wavenumber(wavelength_nm) * (y - self.y0_um).powi(2) / (2.0 * self.focal_mm * 1e3) + self.offset
        } else {
            self.offset
        }
    }
}

// Scales that keep the three polynomial coefficients of order one.
const A_SCALE: f64 = 1e-5;
const B_SCALE: f64 = 1e-2;

/// Fit `a·u² + b·u + c` (u = y − ROI centre) to unit phasors on each row.
struct PhasorParabola {
    u: Vec<f64>,
    target: Vec<Complex64>,
    sqrt_w: Vec<f64>,
}

impl PhasorParabola {
    fn model(&self, p: &[f64], u: f64) -> f64 {
        p[0] * A_SCALE * u * u + p[1] * B_SCALE * u + p[2]
    }

    fn score(&self, p: &[f64]) -> Complex64 {
        self.u
            .iter()
            .zip(&self.target)
            .zip(&self.sqrt_w)
            .map(|((u, z), s)| z * Complex64::from_polar(s * s, -self.model(p, *u)))
            .sum()
    }
}

impl LeastSquares for PhasorParabola {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let mut r = Vec::with_capacity(2 * self.u.len());
        for ((u, z), s) in self.u.iter().zip(&self.target).zip(&self.sqrt_w) {
            let m = Complex64::from_polar(1.0, self.model(p, *u));
            r.push(s * (z.re - m.re));
            r.push(s * (z.im - m.im));
        }
        Some(r)
    }

    fn jacobian(&self, p: &[f64], _r: &[f64], _cfg: &LmConfig) -> Option<Vec<Vec<f64>>> {
        let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(2 * self.u.len())).collect();
        for (u, s) in self.u.iter().zip(&self.sqrt_w) {
            let psi = self.model(p, *u);
            let (sn, cs) = psi.sin_cos();
            let d = [A_SCALE * u * u, B_SCALE * u, 1.0];
            for (col, dj) in cols.iter_mut().zip(d) {
                col.push(s * sn * dj);
                col.push(-s * cs * dj);
            }
        }
        Some(cols)
    }
}

/// Fit `k·(y − y₀)²/(2f) + c` to a wrapped phase map on the ROI.
///
/// Rows are collapsed to unit phasors weighted by their x-coherence, so no
/// unwrapping is needed. A coarse scan over curvature seeds the local fit.
pub fn fit_parabola_phase(phase: &RealMap, roi: &Roi, opts: &ParabolaOptions) -> Result<ParabolaFit> {
    roi.check(&phase.grid)?;
    if roi.height() < 5 {
        return Err(SsmError::invalid("ROI needs at least 5 rows for a parabola fit"));
    }
    if !(opts.min_focal_mm > 0.0 && opts.max_focal_mm > opts.min_focal_mm && opts.wavelength_nm > 0.0) {
        return Err(SsmError::invalid("parabola options need 0 < min_focal < max_focal and a wavelength"));
    }
    let grid: &Grid2D = &phase.grid;
    let yc = 0.5 * (grid.y(roi.y0) + grid.y(roi.y1 - 1));
    let mut prob = PhasorParabola {
        u: Vec::new(),
        target: Vec::new(),
        sqrt_w: Vec::new(),
    };
    for iy in roi.y0..roi.y1 {
        let s: Complex64 = (roi.x0..roi.x1).map(|ix| Complex64::from_polar(1.0, phase.values[[iy, ix]])).sum();
        let z = s / roi.width() as f64;
        if z.norm() == 0.0 {
            continue;
        }
        prob.u.push(grid.y(iy) - yc);
        prob.target.push(z / z.norm());
        prob.sqrt_w.push(z.norm().sqrt());
    }
    if prob.u.len() < 5 {
        return Err(SsmError::fit("too few coherent rows for a parabola fit"));
    }
    let total_w: f64 = prob.sqrt_w.iter().map(|s| s * s).sum();
    let k = wavenumber(opts.wavelength_nm);
    let half = prob.u.iter().fold(0.0f64, |m, u| m.max(u.abs()));

    // Curvature a = k/(2f); step so the edge phase moves by 0.25 rad.
    let a_max = k / (2.0 * opts.min_focal_mm * 1e3);
    let da = 0.25 / (half * half);
    let n_steps = (a_max / da).ceil() as i64;
    let mut best = (0.0, 0.0);
    for i in -n_steps..=n_steps {
        let a = i as f64 * da / A_SCALE;
        let s = prob.score(&[a, 0.0, 0.0]).norm();
        if s > best.1 {
            best = (a, s);
        }
    }
    let c0 = prob.score(&[best.0, 0.0, 0.0]).arg();
    let cfg = LmConfig::default();
    let rep = levenberg_marquardt(&prob, &[best.0, 0.0, c0], &cfg)?;
    let p = &rep.params;
    let err = rep.std_errors();
    let a = p[0] * A_SCALE;
    let coherence = prob.score(p).norm() / total_w;
    let focal_mm = k / (2.0 * a) * 1e-3;
    let curvature_detected = a != 0.0 && focal_mm.abs() <= opts.max_focal_mm;
    if !curvature_detected {
        return Ok(ParabolaFit {
            focal_mm: f64::INFINITY,
            focal_err_mm: f64::NAN,
            y0_um: f64::NAN,
            offset: wrap_phase(p[2]),
            coherence,
            curvature_detected,
        });
    }
    let b = p[1] * B_SCALE;
    let u0 = -b / (2.0 * a);
    Ok(ParabolaFit {
        focal_mm,
        focal_err_mm: focal_mm.abs() * err[0] / p[0].abs(),
        y0_um: yc + u0,
        offset: wrap_phase(p[2] - a * u0 * u0),
        coherence,
        curvature_detected,
    })
}
