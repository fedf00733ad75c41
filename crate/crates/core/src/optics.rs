//! Far-field imaging, the physical cylindrical lens, waist measurement and
//! the waist-versus-power model.
//!
//! Far-field maps are sampled in milliradians: a spatial frequency `k`
//! lands at angle `k/K`. Multiply by `f_eff` to get a focal-plane position.

use crate::error::{Result, SsmError};
use crate::field::{fft2_centered, fit_gaussian_1d, wrap_phase, ComplexField, Grid2D, RealMap};
use crate::fit::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::ssm::wavenumber;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest neighbour phase step accepted before a field counts as aliased.
pub const ALIAS_LIMIT: f64 = 0.9 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingConfig {
    pub f_eff_mm: f64,
    pub magnification: f64,
    pub wavelength_nm: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        ImagingConfig {
            f_eff_mm: 50.0,
            magnification: 4.0,
            wavelength_nm: 780.0,
        }
    }
}

impl ImagingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_eff_mm > 0.0 && self.magnification > 0.0 && self.wavelength_nm > 0.0) {
            return Err(SsmError::invalid(format!(
                "imaging needs positive f_eff, magnification and wavelength, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Optical wavenumber in rad/µm.
    pub fn k(&self) -> f64 {
        wavenumber(self.wavelength_nm)
    }

    /// Angle in mrad to position in the far-field plane in µm.
    pub fn angle_to_position_um(&self, mrad: f64) -> f64 {
        mrad * self.f_eff_mm
    }
}

/// Cylindrical lens in the imaging path, acting on y. An infinite focal
/// length is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalLens {
    pub focal_mm: f64,
}

impl PhysicalLens {
    pub fn new(focal_mm: f64) -> Result<Self> {
        if focal_mm == 0.0 || focal_mm.is_nan() {
            return Err(SsmError::invalid("physical lens focal length must be non-zero"));
        }
        Ok(PhysicalLens { focal_mm })
    }

    pub fn identity() -> Self {
        PhysicalLens { focal_mm: f64::INFINITY }
    }

    /// Focal length as seen at the ensemble: the imaging magnification
    /// shortens it by M².
    pub fn effective_focal_mm(&self, cfg: &ImagingConfig) -> f64 {
        self.focal_mm / (cfg.magnification * cfg.magnification)
    }

    /// Quadratic phase coefficient `b` in `b·y²` (rad/µm²) at the ensemble.
    pub fn curvature(&self, cfg: &ImagingConfig) -> f64 {
        if self.focal_mm.is_infinite() {
            0.0
        } else {
            cfg.magnification * cfg.magnification * cfg.k() / (2.0 * self.focal_mm * 1e3)
        }
    }
}

/// Multiply by `exp(i·M²·k·y²/(2f))`. x is untouched.
pub fn apply_physical_lens(field: &ComplexField, lens: &PhysicalLens, cfg: &ImagingConfig) -> Result<ComplexField> {
    cfg.validate()?;
    if lens.focal_mm == 0.0 || lens.focal_mm.is_nan() {
        return Err(SsmError::invalid("physical lens focal length must be non-zero"));
    }
    let b = lens.curvature(cfg);
    let mut out = field.clone();
    if b != 0.0 {
        let factors: Vec<Complex64> = (0..field.grid.ny)
            .map(|iy| {
                let y = field.grid.y(iy);
                Complex64::from_polar(1.0, b * y * y)
            })
            .collect();
        out.multiply_rows(&factors)?;
    }
    Ok(out)
}

/// Largest wrapped phase step between neighbouring samples that both carry
/// at least 1e-3 of the peak amplitude.
pub fn max_phase_step(field: &ComplexField) -> f64 {
    let v = &field.values;
    let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let floor = 1e-3 * peak;
    let (ny, nx) = v.dim();
    let mut worst: f64 = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let a = v[[iy, ix]];
            if a.norm() < floor {
                continue;
            }
            if ix + 1 < nx && v[[iy, ix + 1]].norm() >= floor {
                worst = worst.max(wrap_phase((v[[iy, ix + 1]] * a.conj()).arg()).abs());
            }
            if iy + 1 < ny && v[[iy + 1, ix]].norm() >= floor {
                worst = worst.max(wrap_phase((v[[iy + 1, ix]] * a.conj()).arg()).abs());
            }
        }
    }
    worst
}

/// Reject fields whose phase changes by close to π between samples.
pub fn check_aliasing(field: &ComplexField) -> Result<()> {
    let step = max_phase_step(field);
    if step > ALIAS_LIMIT {
        return Err(SsmError::Aliasing {
            gradient: step,
            limit: ALIAS_LIMIT,
        });
    }
    Ok(())
}

/// Same guard for an explicitly known (unwrapped) phase profile, which
/// also catches steps beyond π that a wrapped field would hide.
pub fn check_profile_aliasing(phase: &[f64]) -> Result<()> {
    let step = phase.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    if step > ALIAS_LIMIT {
        return Err(SsmError::Aliasing {
            gradient: step,
            limit: ALIAS_LIMIT,
        });
    }
    Ok(())
}

/// Far-field amplitude of a near field: a centred unitary 2D transform on a
/// grid sampled in mrad. Energy is conserved sample for sample.
pub fn to_far_field(field: &ComplexField, cfg: &ImagingConfig) -> Result<ComplexField> {
    cfg.validate()?;
    check_aliasing(field)?;
    let spec = fft2_centered(field)?;
    let s = 1e3 / cfg.k();
    let grid = Grid2D::new(field.grid.nx, field.grid.ny, spec.grid.pitch_x * s, spec.grid.pitch_y * s)?;
    ComplexField::new(grid, spec.values)
}

/// 1/e² intensity radius along y from a Gaussian fit to the y-marginal, in
/// the map's y units.
pub fn measure_waist(intensity: &RealMap) -> Result<f64> {
    let marginal = intensity.y_marginal();
    let ys = intensity.grid.ys();
    let fit = fit_gaussian_1d(&ys, &marginal, &LmConfig::default())?;
    Ok(2.0 * fit.sigma.abs())
}

/// Parameters of the waist-versus-power curve.
///
/// The SSM phase is `phase_scale·p·(y/100 µm)²` for pulse power `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaistFitModel {
    pub w_sw_um: f64,
    pub gamma: f64,
    pub f_ph_mm: f64,
    pub phase_scale: f64,
}

impl Default for WaistFitModel {
    fn default() -> Self {
        WaistFitModel {
            w_sw_um: 150.0,
            gamma: 0.042,
            f_ph_mm: -2000.0,
            phase_scale: 0.4,
        }
    }
}

/// Length scale the SSM power is referenced to.
const PHASE_REF_UM: f64 = 100.0;

impl WaistFitModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_sw_um > 0.0) || !(self.gamma >= 0.0) || self.f_ph_mm == 0.0 || !self.phase_scale.is_finite() {
            return Err(SsmError::invalid(format!("invalid waist model {self:?}")));
        }
        Ok(())
    }

    /// Power at which the SSM lens cancels the physical lens.
    pub fn compensation_power(&self, cfg: &ImagingConfig) -> f64 {
        let b = PhysicalLens { focal_mm: self.f_ph_mm }.curvature(cfg);
        -b * PHASE_REF_UM * PHASE_REF_UM / self.phase_scale
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.w_sw_um, self.gamma, self.f_ph_mm, self.phase_scale]
    }

    fn from_slice(p: &[f64]) -> Self {
        WaistFitModel {
            w_sw_um: p[0],
            gamma: p[1],
            f_ph_mm: p[2],
            phase_scale: p[3],
        }
    }
}

/// Sampling of the one-dimensional waist simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaistSimConfig {
    pub imaging: ImagingConfig,
    /// Transform length; zero padding sets the far-field resolution.
    pub n_samples: usize,
    pub pitch_um: f64,
}

impl Default for WaistSimConfig {
    fn default() -> Self {
        WaistSimConfig {
            imaging: ImagingConfig::default(),
            n_samples: 8192,
            pitch_um: 3.25,
        }
    }
}

impl WaistSimConfig {
    pub fn validate(&self) -> Result<()> {
        self.imaging.validate()?;
        if self.n_samples < 64 || !self.n_samples.is_multiple_of(2) || !(self.pitch_um > 0.0) {
            return Err(SsmError::invalid("waist simulation needs an even n_samples >= 64 and a positive pitch"));
        }
        Ok(())
    }
}

/// Far-field waist (mrad) for each power. Powers are evaluated in parallel;
/// each is independent so the result does not depend on scheduling.
pub fn simulate_waist_curve(model: &WaistFitModel, powers: &[f64], cfg: &WaistSimConfig) -> Result<Vec<f64>> {
    model.validate()?;
    cfg.validate()?;
    powers.par_iter().map(|&p| waist_at_power(model, p, cfg)).collect()
}

/// No validation of `gamma`'s sign so the fitter can cross zero.
fn waist_at_power(model: &WaistFitModel, power: f64, cfg: &WaistSimConfig) -> Result<f64> {
    let n = cfg.n_samples;
    let dy = cfg.pitch_um;
    let b_ph = PhysicalLens { focal_mm: model.f_ph_mm }.curvature(&cfg.imaging);
    let c_ssm = model.phase_scale * power / (PHASE_REF_UM * PHASE_REF_UM);
    let w = model.w_sw_um;

    let mut field = vec![Complex64::new(0.0, 0.0); n];
    let mut phase = Vec::new();
    // Beyond 7 waists the amplitude is below e^-49; leave it at zero.
    let support = 7.0 * w;
    for (j, f) in field.iter_mut().enumerate() {
        let y = (j as f64 - (n / 2) as f64) * dy;
        if y.abs() > support {
            continue;
        }
        let phi_ssm = c_ssm * y * y;
        let amp = (-(y / w).powi(2) - model.gamma * phi_ssm * phi_ssm).exp();
        let total = phi_ssm + b_ph * y * y;
        if amp > 1e-3 {
            phase.push(total);
        }
        *f = Complex64::from_polar(amp, total);
    }
    check_profile_aliasing(&phase)?;
    if (n / 2) as f64 * dy < 1.5 * support {
        log::warn!("waist simulation window {:.0} µm barely covers the beam", n as f64 * dy);
    }

    field.rotate_left(n / 2);
    FftPlanner::new().plan_fft_forward(n).process(&mut field);
    field.rotate_left(n / 2);

    let intensity: Vec<f64> = field.iter().map(|c| c.norm_sqr()).collect();
    let dth = 2.0 * PI / (n as f64 * dy) / cfg.imaging.k() * 1e3;
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-8 * peak;
    let lo = intensity.iter().position(|&v| v > floor).unwrap_or(0);
    let hi = intensity.iter().rposition(|&v| v > floor).unwrap_or(n - 1);
    // Pad the fit window so the baseline is well represented.
    let pad = (hi - lo) / 2 + 4;
    let (lo, hi) = (lo.saturating_sub(pad), (hi + pad).min(n - 1));
    let xs: Vec<f64> = (lo..=hi).map(|j| (j as f64 - (n / 2) as f64) * dth).collect();
    let cfg_fit = LmConfig {
        xtol: 1e-14,
        ftol: 1e-15,
        ..LmConfig::default()
    };
    let fit = fit_gaussian_1d(&xs, &intensity[lo..=hi], &cfg_fit)?;
    Ok(2.0 * fit.sigma.abs())
}

/// Fitted waist model with uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaistFitResult {
    pub model: WaistFitModel,
    /// Standard errors in the order w_sw, gamma, f_ph, phase_scale.
    pub std_errors: Vec<f64>,
    pub covariances: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual_rms: f64,
}

struct WaistProblem<'a> {
    /// Distinct powers; repeated measurements share one simulation.
    powers: Vec<f64>,
    /// Index into `powers` for each observation.
    which: Vec<usize>,
    observed: Vec<f64>,
    cfg: &'a WaistSimConfig,
    scales: [f64; 4],
}

impl LeastSquares for WaistProblem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let m = WaistFitModel::from_slice(p);
        if !(m.w_sw_um > 0.0) || m.f_ph_mm == 0.0 || !p.iter().all(|v| v.is_finite()) {
            return None;
        }
        let sim: Result<Vec<f64>> = self.powers.par_iter().map(|&pw| waist_at_power(&m, pw, self.cfg)).collect();
        let sim = sim.ok()?;
        Some(self.which.iter().zip(&self.observed).map(|(&i, o)| (sim[i] - o) / o).collect())
    }

    fn fd_scale(&self, j: usize) -> f64 {
        self.scales[j]
    }
}

/// Least-squares fit of the simulated curve to `(power, w0_mrad)` data,
/// using relative residuals so the dip and the wings weigh equally.
pub fn fit_waist_model(observed: &[(f64, f64)], cfg: &WaistSimConfig, initial: &WaistFitModel) -> Result<WaistFitResult> {
    if observed.len() < 8 {
        return Err(SsmError::invalid(format!(
            "waist fit needs at least 8 points, got {}",
            observed.len()
        )));
    }
    if observed.iter().any(|(p, w)| !p.is_finite() || !(*w > 0.0)) {
        return Err(SsmError::invalid("waist data must be finite with positive waists"));
    }
    initial.validate()?;
    cfg.validate()?;
    let mut powers: Vec<f64> = Vec::new();
    let which = observed
        .iter()
        .map(|o| match powers.iter().position(|&p| p == o.0) {
            Some(i) => i,
            None => {
                powers.push(o.0);
                powers.len() - 1
            }
        })
        .collect();
    let problem = WaistProblem {
        powers,
        which,
        observed: observed.iter().map(|o| o.1).collect(),
        cfg,
        scales: [
            initial.w_sw_um.abs().max(1.0),
            0.04,
            initial.f_ph_mm.abs().max(1.0),
            initial.phase_scale.abs().max(1e-3),
        ],
    };
    let lm = LmConfig {
        fd_step: 1e-4,
        central: true,
        ..LmConfig::default()
    };
    let rep = levenberg_marquardt(&problem, &initial.to_vec(), &lm)?;
    let covariances = match &rep.covariance {
        Some(c) => (0..4).map(|i| (0..4).map(|j| c[(i, j)]).collect()).collect(),
        None => vec![vec![f64::NAN; 4]; 4],
    };
    Ok(WaistFitResult {
        model: WaistFitModel::from_slice(&rep.params),
        std_errors: rep.std_errors(),
        covariances,
        iterations: rep.iterations,
        residual_rms: rep.residual_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_field;
    use crate::ssm::{lens_phase, sawtooth_phase};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> Grid2D {
        Grid2D::square(512, 3.25).unwrap()
    }

    fn with_phase(field: &ComplexField, phase: &[f64]) -> ComplexField {
        let mut out = field.clone();
        let f: Vec<Complex64> = phase.iter().map(|p| Complex64::from_polar(1.0, *p)).collect();
        out.multiply_rows(&f).unwrap();
        out
    }

    /// Intensity 1/e² radius of the far field of exp(−y²/w² + i·b·y²), in mrad.
    fn analytic_waist(w: f64, b: f64, k: f64) -> f64 {
        2.0 / (k * w) * (1.0 + b * b * w.powi(4)).sqrt() * 1e3
    }

    #[test]
    fn physical_lens_effective_focal() {
        let lens = PhysicalLens::new(-2000.0).unwrap();
        assert_eq!(lens.effective_focal_mm(&ImagingConfig::default()), -125.0);
        assert!(PhysicalLens::new(0.0).is_err());
    }

    #[test]
    fn identity_lens_leaves_field() {
        let g = grid();
        let f = gaussian_field(&g, 100.0, 80.0, (0.0, 0.0)).unwrap();
        let out = apply_physical_lens(&f, &PhysicalLens::identity(), &ImagingConfig::default()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn opposite_lenses_cancel() {
        let g = grid();
        let cfg = ImagingConfig::default();
        let f = gaussian_field(&g, 100.0, 80.0, (10.0, -5.0)).unwrap();
        let a = apply_physical_lens(&f, &PhysicalLens::new(-700.0).unwrap(), &cfg).unwrap();
        let b = apply_physical_lens(&a, &PhysicalLens::new(700.0).unwrap(), &cfg).unwrap();
        let err = f.values.iter().zip(b.values.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn far_field_conserves_energy() {
        let g = grid();
        let f = gaussian_field(&g, 60.0, 90.0, (20.0, 0.0)).unwrap();
        let lens = lens_phase(&g, 200.0, 780.0).unwrap();
        let f = with_phase(&f, &lens.phase);
        let ff = to_far_field(&f, &ImagingConfig::default()).unwrap();
        let rel = (ff.total_intensity() - f.total_intensity()).abs() / f.total_intensity();
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn flat_gaussian_far_field_waist() {
        let g = grid();
        let cfg = ImagingConfig::default();
        let f = gaussian_field(&g, 30.0, 30.0, (0.0, 0.0)).unwrap();
        let w0 = measure_waist(&to_far_field(&f, &cfg).unwrap().intensity()).unwrap();
        let expected = 0.780 / (PI * 30.0) * 1e3;
        assert!((expected - 8.276).abs() < 1e-3);
        assert!((w0 - expected).abs() / expected < 5e-3, "{w0} vs {expected}");
    }

    #[test]
    fn ramp_shifts_far_field_centroid() {
        let g = grid();
        let cfg = ImagingConfig::default();
        let grad = 2.0 * PI / 100.0;
        let f = gaussian_field(&g, 100.0, 100.0, (0.0, 0.0)).unwrap();
        let ramp = sawtooth_phase(&g, grad, f64::INFINITY).unwrap();
        let ff = to_far_field(&with_phase(&f, &ramp.phase), &cfg).unwrap();
        let m = ff.intensity().y_marginal();
        let ys = ff.grid.ys();
        let c = m.iter().zip(&ys).map(|(a, y)| a * y).sum::<f64>() / m.iter().sum::<f64>();
        let expected = grad / cfg.k() * 1e3;
        assert!((expected - 7.8).abs() < 0.01);
        assert!((c - expected).abs() < 0.02, "{c} vs {expected}");
    }

    #[test]
    fn steep_ramp_is_rejected() {
        let g = grid();
        let f = gaussian_field(&g, 200.0, 200.0, (0.0, 0.0)).unwrap();
        let ramp = sawtooth_phase(&g, 3.0 / 3.25, f64::INFINITY).unwrap();
        let err = to_far_field(&with_phase(&f, &ramp.phase), &ImagingConfig::default()).unwrap_err();
        assert!(matches!(err, SsmError::Aliasing { gradient, .. } if gradient > 2.9));
        assert!(check_profile_aliasing(&ramp.phase).is_err());
    }

    #[test]
    fn ssm_lens_compensates_physical_lens() {
        let g = grid();
        let cfg = ImagingConfig::default();
        let f = gaussian_field(&g, 150.0, 150.0, (0.0, 0.0)).unwrap();
        let phys = PhysicalLens::new(-2000.0).unwrap();
        let aberrated = apply_physical_lens(&f, &phys, &cfg).unwrap();
        let ssm = lens_phase(&g, -phys.effective_focal_mm(&cfg), cfg.wavelength_nm).unwrap();
        let fixed = with_phase(&aberrated, &ssm.phase);
        let w_ref = measure_waist(&to_far_field(&f, &cfg).unwrap().intensity()).unwrap();
        let w_ab = measure_waist(&to_far_field(&aberrated, &cfg).unwrap().intensity()).unwrap();
        let w_fix = measure_waist(&to_far_field(&fixed, &cfg).unwrap().intensity()).unwrap();
        assert!((w_fix - w_ref).abs() / w_ref < 0.01, "{w_fix} vs {w_ref}");
        assert!(w_ab > 1.15 * w_ref);
    }

    #[test]
    fn measure_waist_of_synthetic_gaussian() {
        let g = Grid2D::square(256, 0.25).unwrap();
        let w = 8.3;
        let map = RealMap::from_fn(g, |x, y| (-2.0 * (x * x + y * y) / (w * w)).exp());
        let got = measure_waist(&map).unwrap();
        assert!((got - w).abs() / w < 5e-3, "{got}");

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut noisy = map.clone();
        noisy.values.mapv_inplace(|v| v + noise.sample(&mut rng));
        let got = measure_waist(&noisy).unwrap();
        assert!((got - w).abs() / w < 0.03, "{got}");
    }

    #[test]
    fn flat_map_has_no_waist() {
        let map = RealMap::from_fn(grid(), |_, _| 1.0);
        assert!(matches!(measure_waist(&map), Err(SsmError::FitFailed { .. })));
    }

    #[test]
    fn waist_curve_matches_gaussian_focus() {
        let cfg = WaistSimConfig::default();
        let k = cfg.imaging.k();
        let m = WaistFitModel {
            gamma: 0.0,
            ..WaistFitModel::default()
        };
        let b = PhysicalLens { focal_mm: m.f_ph_mm }.curvature(&cfg.imaging);
        let p_c = m.compensation_power(&cfg.imaging);
        let w = simulate_waist_curve(&m, &[0.0, p_c], &cfg).unwrap();
        let at_zero = analytic_waist(m.w_sw_um, b, k);
        let at_comp = cfg.imaging.wavelength_nm * 1e-3 / (PI * m.w_sw_um) * 1e3;
        assert!((w[0] - at_zero).abs() / at_zero < 1e-4, "{} vs {at_zero}", w[0]);
        assert!((w[1] - at_comp).abs() / at_comp < 1e-4, "{} vs {at_comp}", w[1]);
    }

    #[test]
    fn waist_grows_past_compensation() {
        let cfg = WaistSimConfig::default();
        let m = WaistFitModel::default();
        let p_c = m.compensation_power(&cfg.imaging);
        let powers: Vec<f64> = (0..40).map(|i| p_c * (1.05 + 3.0 * i as f64 / 39.0)).collect();
        let w = simulate_waist_curve(&m, &powers, &cfg).unwrap();
        assert!(w.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn dip_location_scales_with_inverse_focal_length() {
        let cfg = WaistSimConfig::default();
        let argmin = |f_ph: f64| {
            let m = WaistFitModel {
                f_ph_mm: f_ph,
                ..WaistFitModel::default()
            };
            let powers: Vec<f64> = (0..801).map(|i| i as f64 * 0.004).collect();
            let w = simulate_waist_curve(&m, &powers, &cfg).unwrap();
            let i = (0..w.len()).min_by(|a, b| w[*a].total_cmp(&w[*b])).unwrap();
            powers[i]
        };
        let p1 = argmin(-2000.0);
        let p2 = argmin(-1000.0);
        assert!((p2 / p1 - 2.0).abs() < 0.02, "{p1} {p2}");
    }

    fn noisy_curve(truth: &WaistFitModel, cfg: &WaistSimConfig, seed: u64) -> Vec<(f64, f64)> {
        let p_c = truth.compensation_power(&cfg.imaging);
        let powers: Vec<f64> = (0..49).map(|i| 4.0 * p_c * i as f64 / 48.0).collect();
        let w = simulate_waist_curve(truth, &powers, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.02).unwrap();
        powers.into_iter().zip(w).map(|(p, w)| (p, w * (1.0 + noise.sample(&mut rng)))).collect()
    }

    #[test]
    fn waist_fit_needs_eight_points() {
        let obs: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, 1.0)).collect();
        let err = fit_waist_model(&obs, &WaistSimConfig::default(), &WaistFitModel::default()).unwrap_err();
        assert!(matches!(err, SsmError::InvalidArgument(_)));
    }

    #[test]
    fn waist_fit_recovers_noiseless_truth() {
        let cfg = WaistSimConfig::default();
        let truth = WaistFitModel::default();
        let p_c = truth.compensation_power(&cfg.imaging);
        let powers: Vec<f64> = (0..25).map(|i| 4.0 * p_c * i as f64 / 24.0).collect();
        let w = simulate_waist_curve(&truth, &powers, &cfg).unwrap();
        let obs: Vec<(f64, f64)> = powers.into_iter().zip(w).collect();
        let start = WaistFitModel {
            w_sw_um: 130.0,
            gamma: 0.03,
            f_ph_mm: -2300.0,
            phase_scale: 0.45,
        };
        let fit = fit_waist_model(&obs, &cfg, &start).unwrap();
        let m = fit.model;
        assert!((m.w_sw_um / 150.0 - 1.0).abs() < 1e-3, "{m:?}");
        assert!((m.gamma / 0.042 - 1.0).abs() < 1e-2, "{m:?}");
        assert!((m.f_ph_mm / -2000.0 - 1.0).abs() < 1e-3, "{m:?}");
        assert!((m.phase_scale / 0.4 - 1.0).abs() < 1e-3, "{m:?}");
    }

    #[test]
    fn null_gamma_is_consistent_with_zero() {
        let cfg = WaistSimConfig::default();
        let truth = WaistFitModel {
            gamma: 0.0,
            ..WaistFitModel::default()
        };
        let obs = noisy_curve(&truth, &cfg, 11);
        let fit = fit_waist_model(&obs, &cfg, &WaistFitModel::default()).unwrap();
        assert!(fit.model.gamma.abs() < 3.0 * fit.std_errors[1], "{fit:?}");
    }
}
