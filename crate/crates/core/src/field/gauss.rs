use super::{ComplexField, Grid2D, RealMap, Roi};
use crate::error::{Result, SsmError};
use crate::fit::{levenberg_marquardt, LeastSquares, LmConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real, positive Gaussian envelope `exp[−(x−x₀)²/w_x² − (y−y₀)²/w_y²]` with
/// unit peak. Waists are 1/e amplitude radii.
pub fn gaussian_field(grid: &Grid2D, waist_x: f64, waist_y: f64, center: (f64, f64)) -> Result<ComplexField> {
    grid.validate()?;
    if !(waist_x > 0.0 && waist_y > 0.0) {
        return Err(SsmError::invalid(format!("waists must be positive, got ({waist_x}, {waist_y})")));
    }
    if !grid.contains(center.0, center.1) {
        return Err(SsmError::invalid(format!("centre {center:?} lies outside the grid")));
    }
    let gx: Vec<f64> = grid.xs().iter().map(|x| (-((x - center.0) / waist_x).powi(2)).exp()).collect();
    let gy: Vec<f64> = grid.ys().iter().map(|y| (-((y - center.1) / waist_y).powi(2)).exp()).collect();
    let values = ndarray::Array2::from_shape_fn(grid.shape(), |(iy, ix)| Complex64::new(gy[iy] * gx[ix], 0.0));
    Ok(ComplexField { grid: *grid, values })
}

/// Result of fitting `A·exp[−(x−x₀)²/(2σ_x²) − (y−y₀)²/(2σ_y²)] + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit2D {
    pub amplitude: f64,
    pub x0: f64,
    pub y0: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

impl GaussianFit2D {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let ex = (x - self.x0) / self.sigma_x;
        let ey = (y - self.y0) / self.sigma_y;
        self.amplitude * (-0.5 * (ex * ex + ey * ey)).exp() + self.offset
    }

    pub fn render(&self, grid: &Grid2D) -> RealMap {
        RealMap::from_fn(*grid, |x, y| self.eval(x, y))
    }
}

/// Offsets from the centre and separable Gaussian factors: `(dx, dy, ex, ey)`.
type Axes = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

struct Gauss2dProblem<'a> {
    map: &'a RealMap,
    roi: Roi,
}

impl Gauss2dProblem<'_> {
    fn axes(&self, p: &[f64]) -> Option<Axes> {
        let (sx, sy) = (p[3], p[4]);
        if !(sx > 0.0 && sy > 0.0) {
            return None;
        }
        let g = &self.map.grid;
        let dx: Vec<f64> = (self.roi.x0..self.roi.x1).map(|i| g.x(i) - p[1]).collect();
        let dy: Vec<f64> = (self.roi.y0..self.roi.y1).map(|i| g.y(i) - p[2]).collect();
        let ex = dx.iter().map(|d| (-0.5 * (d / sx).powi(2)).exp()).collect();
        let ey = dy.iter().map(|d| (-0.5 * (d / sy).powi(2)).exp()).collect();
        Some((dx, dy, ex, ey))
    }
}

impl LeastSquares for Gauss2dProblem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let (_, _, ex, ey) = self.axes(p)?;
        let mut r = Vec::with_capacity(self.roi.len());
        for (j, iy) in (self.roi.y0..self.roi.y1).enumerate() {
            for (i, ix) in (self.roi.x0..self.roi.x1).enumerate() {
                r.push(p[0] * ey[j] * ex[i] + p[5] - self.map.values[[iy, ix]]);
            }
        }
        Some(r)
    }

    fn jacobian(&self, p: &[f64], _r: &[f64], _cfg: &LmConfig) -> Option<Vec<Vec<f64>>> {
        let (dx, dy, ex, ey) = self.axes(p)?;
        let (a, sx, sy) = (p[0], p[3], p[4]);
        let m = self.roi.len();
        let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(m)).collect();
        for j in 0..dy.len() {
            for i in 0..dx.len() {
                let e = ey[j] * ex[i];
                cols[0].push(e);
                cols[1].push(a * e * dx[i] / (sx * sx));
                cols[2].push(a * e * dy[j] / (sy * sy));
                cols[3].push(a * e * dx[i] * dx[i] / (sx * sx * sx));
                cols[4].push(a * e * dy[j] * dy[j] / (sy * sy * sy));
                cols[5].push(1.0);
            }
        }
        Some(cols)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fit a 2D Gaussian to the whole map.
///
/// The map must hold a dominant single lobe (peak at least 5× the median).
pub fn fit_gaussian_2d(map: &RealMap) -> Result<GaussianFit2D> {
    fit_core(map, &map.grid.full_roi(), 5.0)
}

/// Fit a 2D Gaussian using only the samples inside `roi`.
///
/// Initial guess comes from the background-subtracted centroid and second
/// moments; the optimiser is capped at 200 iterations. Only a peak above
/// the median is required, since a tight crop has a high median.
pub fn fit_gaussian_2d_in(map: &RealMap, roi: &Roi) -> Result<GaussianFit2D> {
    fit_core(map, roi, 1.0)
}

fn fit_core(map: &RealMap, roi: &Roi, dominance: f64) -> Result<GaussianFit2D> {
    roi.check(&map.grid)?;
    let vals: Vec<f64> = roi.indices().map(|(iy, ix)| map.values[[iy, ix]]).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(SsmError::fit("map contains non-finite samples"));
    }
    let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let med = median(vals.clone());
    if !(peak > med && peak >= dominance * med) {
        return Err(SsmError::fit(format!(
            "no dominant lobe (peak {peak:.4e}, median {med:.4e})"
        )));
    }

    let g = &map.grid;
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for ((iy, ix), v) in roi.indices().zip(&vals) {
        let w = (v - med).max(0.0);
        sw += w;
        sx += w * g.x(ix);
        sy += w * g.y(iy);
    }
    let (cx, cy) = (sx / sw, sy / sw);
    let (mut vx, mut vy) = (0.0, 0.0);
    for ((iy, ix), v) in roi.indices().zip(&vals) {
        let w = (v - med).max(0.0);
        vx += w * (g.x(ix) - cx).powi(2);
        vy += w * (g.y(iy) - cy).powi(2);
    }
    let sig_x = (vx / sw).sqrt().max(0.5 * g.pitch_x);
    let sig_y = (vy / sw).sqrt().max(0.5 * g.pitch_y);
    let p0 = [peak - med, cx, cy, sig_x, sig_y, med];

    let problem = Gauss2dProblem { map, roi: *roi };
    let rep = levenberg_marquardt(&problem, &p0, &LmConfig::default())?;
    let p = &rep.params;
    if !(p[3] > 0.0 && p[4] > 0.0 && p.iter().all(|v| v.is_finite())) {
        return Err(SsmError::FitFailed {
            reason: "fit converged to a degenerate Gaussian".into(),
            best: Some(p.clone()),
        });
    }
    Ok(GaussianFit2D {
        amplitude: p[0],
        x0: p[1],
        y0: p[2],
        sigma_x: p[3],
        sigma_y: p[4],
        offset: p[5],
        residual_rms: rep.residual_rms,
        iterations: rep.iterations,
    })
}

/// Minimal rectangle bounding `n_sigma` standard deviations of a Gaussian
/// fitted to a readout image, clamped to the grid.
pub fn roi_from_readout(readout_intensity: &RealMap, n_sigma: f64) -> Result<Roi> {
    roi_from_readout_in(readout_intensity, &readout_intensity.grid.full_roi(), n_sigma)
}

/// As [`roi_from_readout`] but fitting and clamping within `within`.
pub fn roi_from_readout_in(readout_intensity: &RealMap, within: &Roi, n_sigma: f64) -> Result<Roi> {
    if !(n_sigma >= 0.0 && n_sigma.is_finite()) {
        return Err(SsmError::invalid(format!("n_sigma must be non-negative, got {n_sigma}")));
    }
    let fit = fit_gaussian_2d_in(readout_intensity, within)?;
    Ok(roi_around(&readout_intensity.grid, &fit, n_sigma, within))
}

pub(crate) fn roi_around(grid: &Grid2D, fit: &GaussianFit2D, n_sigma: f64, within: &Roi) -> Roi {
    let clamp = |v: f64, lo: usize, hi: usize| -> usize { v.round().clamp(lo as f64, (hi - 1) as f64) as usize };
    let lo_x = clamp(grid.fx(fit.x0 - n_sigma * fit.sigma_x), within.x0, within.x1);
    let hi_x = clamp(grid.fx(fit.x0 + n_sigma * fit.sigma_x), within.x0, within.x1);
    let lo_y = clamp(grid.fy(fit.y0 - n_sigma * fit.sigma_y), within.y0, within.y1);
    let hi_y = clamp(grid.fy(fit.y0 + n_sigma * fit.sigma_y), within.y0, within.y1);
    Roi {
        x0: lo_x,
        x1: hi_x + 1,
        y0: lo_y,
        y1: hi_y + 1,
    }
}

/// 1D Gaussian `A·exp[−(x−x₀)²/(2σ²)] + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit1D {
    pub amplitude: f64,
    pub x0: f64,
    pub sigma: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

struct Gauss1dProblem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl LeastSquares for Gauss1dProblem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        if !(p[2] > 0.0) {
            return None;
        }
        Some(
            self.xs
                .iter()
                .zip(self.ys)
                .map(|(x, y)| p[0] * (-0.5 * ((x - p[1]) / p[2]).powi(2)).exp() + p[3] - y)
                .collect(),
        )
    }

    fn jacobian(&self, p: &[f64], _r: &[f64], _cfg: &LmConfig) -> Option<Vec<Vec<f64>>> {
        let (a, x0, s) = (p[0], p[1], p[2]);
        if !(s > 0.0) {
            return None;
        }
        let mut cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(self.xs.len())).collect();
        for x in self.xs {
            let d = x - x0;
            let e = (-0.5 * (d / s).powi(2)).exp();
            cols[0].push(e);
            cols[1].push(a * e * d / (s * s));
            cols[2].push(a * e * d * d / (s * s * s));
            cols[3].push(1.0);
        }
        Some(cols)
    }
}

/// Fit a 1D Gaussian, initialised from moments. `cfg` controls how tightly
/// the optimiser converges.
pub fn fit_gaussian_1d(xs: &[f64], ys: &[f64], cfg: &LmConfig) -> Result<GaussianFit1D> {
    if xs.len() != ys.len() || xs.len() < 5 {
        return Err(SsmError::fit("need at least 5 matching samples"));
    }
    if ys.iter().any(|v| !v.is_finite()) {
        return Err(SsmError::fit("profile contains non-finite samples"));
    }
    let peak = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let med = median(ys.to_vec());
    if !(peak > med && peak >= 5.0 * med) {
        return Err(SsmError::fit(format!(
            "no dominant lobe (peak {peak:.4e}, median {med:.4e})"
        )));
    }
    let (mut sw, mut sx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let w = (y - med).max(0.0);
        sw += w;
        sx += w * x;
    }
    let c = sx / sw;
    let var = xs.iter().zip(ys).map(|(x, y)| (y - med).max(0.0) * (x - c).powi(2)).sum::<f64>() / sw;
    let step = (xs[1] - xs[0]).abs();
    let p0 = [peak - med, c, var.sqrt().max(0.5 * step), med];
    let rep = levenberg_marquardt(&Gauss1dProblem { xs, ys }, &p0, cfg)?;
    let p = &rep.params;
    if !(p[2] > 0.0 && p.iter().all(|v| v.is_finite())) {
        return Err(SsmError::FitFailed {
            reason: "degenerate 1D Gaussian".into(),
            best: Some(p.clone()),
        });
    }
    Ok(GaussianFit1D {
        amplitude: p[0],
        x0: p[1],
        sigma: p[2],
        offset: p[3],
        residual_rms: rep.residual_rms,
    })
}
