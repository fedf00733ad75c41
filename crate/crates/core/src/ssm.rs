//! The spatial spin-wave modulator: 1D phase profiles, the intensity/phase
//! calibration, the longitudinal intensity-noise model and the resulting
//! Gaussian decoherence law.

use crate::error::{Result, SsmError};
use crate::field::Grid2D;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wavenumber `2π/λ` in rad/µm for a wavelength in nm.
pub fn wavenumber(wavelength_nm: f64) -> f64 {
    2.0 * PI / (wavelength_nm * 1e-3)
}

/// Phase φ(y) sampled on a grid's y axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile1D {
    pub y: Vec<f64>,
    pub phase: Vec<f64>,
}

impl PhaseProfile1D {
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64) -> f64) -> Self {
        let y = grid.ys();
        let phase = y.iter().map(|&v| f(v)).collect();
        PhaseProfile1D { y, phase }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        PhaseProfile1D {
            y: self.y.clone(),
            phase: self.phase.iter().map(|p| p * s).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Largest phase step between neighbouring samples, rad/sample.
    pub fn max_step(&self) -> f64 {
        self.phase.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

/// Cylindrical lens `φ(y) = k·y²/(2f)`; negative `f` diverges.
pub fn lens_phase(grid: &Grid2D, focal_mm: f64, wavelength_nm: f64) -> Result<PhaseProfile1D> {
    if focal_mm == 0.0 || focal_mm.is_nan() {
        return Err(SsmError::invalid("lens focal length must be non-zero"));
    }
    if !(wavelength_nm > 0.0) {
        return Err(SsmError::invalid("wavelength must be positive"));
    }
    let k = wavenumber(wavelength_nm);
    let f_um = focal_mm * 1e3;
    Ok(PhaseProfile1D::from_fn(grid, |y| k * y * y / (2.0 * f_um)))
}

/// Logistic step of `height` rad centred at `y0`.
///
/// `edge_width` is the 10–90 % rise distance; zero gives a hard step with
/// φ(y0) = height/2.
pub fn step_phase(grid: &Grid2D, y0: f64, height: f64, edge_width: f64) -> Result<PhaseProfile1D> {
    if !(edge_width >= 0.0) || !height.is_finite() || !y0.is_finite() {
        return Err(SsmError::invalid("step needs finite height/centre and edge_width >= 0"));
    }
    // 10–90 % of a logistic spans 2·ln 9 scale lengths.
    let scale = edge_width / (2.0 * 9f64.ln());
    Ok(PhaseProfile1D::from_fn(grid, |y| {
        let d = y - y0;
        if scale == 0.0 {
            match d.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => height,
                Some(std::cmp::Ordering::Less) => 0.0,
                _ => 0.5 * height,
            }
        } else {
            height / (1.0 + (-d / scale).exp())
        }
    }))
}

/// Linear ramp `gradient·y` folded into [0, wrap). An infinite `wrap`
/// leaves the ramp unwrapped.
pub fn sawtooth_phase(grid: &Grid2D, gradient: f64, wrap: f64) -> Result<PhaseProfile1D> {
    if !(wrap > 0.0) || !gradient.is_finite() {
        return Err(SsmError::invalid("saw-tooth needs wrap > 0 and a finite gradient"));
    }
    Ok(PhaseProfile1D::from_fn(grid, |y| {
        let p = gradient * y;
        if wrap.is_finite() {
            p.rem_euclid(wrap)
        } else {
            p
        }
    }))
}

/// Sign of the imposed phase, set by which side of resonance the SSM beam sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum DetuningSign {
    Plus,
    Minus,
}

impl DetuningSign {
    pub fn factor(self) -> f64 {
        match self {
            DetuningSign::Plus => 1.0,
            DetuningSign::Minus => -1.0,
        }
    }
}

impl TryFrom<i32> for DetuningSign {
    type Error = String;
    fn try_from(v: i32) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(DetuningSign::Plus),
            -1 => Ok(DetuningSign::Minus),
            _ => Err(format!("detuning sign must be +1 or -1, got {v}")),
        }
    }
}

impl From<DetuningSign> for i32 {
    fn from(s: DetuningSign) -> i32 {
        s.factor() as i32
    }
}

/// Longitudinal white intensity noise of the SSM beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsmNoiseModel {
    /// Intensity standard deviation relative to the local mean.
    pub sigma_rel: f64,
    /// Correlation length along z (µm, −3 dB).
    pub corr_length_um: f64,
    /// Effective ensemble length L (µm).
    pub ensemble_length_um: f64,
}

impl Default for SsmNoiseModel {
    fn default() -> Self {
        SsmNoiseModel {
            sigma_rel: 0.29,
            corr_length_um: 37.0,
            ensemble_length_um: 10_000.0,
        }
    }
}

impl SsmNoiseModel {
    pub fn noiseless() -> Self {
        SsmNoiseModel {
            sigma_rel: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_rel >= 0.0) {
            return Err(SsmError::invalid("sigma_rel must be >= 0"));
        }
        if !(self.corr_length_um > 0.0 && self.corr_length_um < self.ensemble_length_um) {
            return Err(SsmError::invalid(
                "need 0 < corr_length_um < ensemble_length_um",
            ));
        }
        Ok(())
    }

    /// Number of independent correlation cells along the ensemble.
    pub fn n_cells(&self) -> usize {
        (self.ensemble_length_um / self.corr_length_um).round().max(1.0) as usize
    }

    /// Decoherence coefficient γ = σ_rel²/2 of the quadratic law Γ = γφ².
    pub fn gamma(&self) -> f64 {
        gamma_from_sigma_rel(self.sigma_rel)
    }
}

pub fn gamma_from_sigma_rel(sigma_rel: f64) -> f64 {
    0.5 * sigma_rel * sigma_rel
}

pub fn sigma_rel_from_gamma(gamma: f64) -> f64 {
    (2.0 * gamma).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsmPulse {
    /// Intended phase φ(y).
    pub target: PhaseProfile1D,
    /// Phase per intensity unit per µs.
    pub alpha: f64,
    pub duration_us: f64,
    pub detuning_sign: DetuningSign,
    pub noise: SsmNoiseModel,
}

impl SsmPulse {
    pub fn new(target: PhaseProfile1D, alpha: f64, duration_us: f64, detuning_sign: DetuningSign, noise: SsmNoiseModel) -> Result<Self> {
        let p = SsmPulse {
            target,
            alpha,
            duration_us,
            detuning_sign,
            noise,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(SsmError::invalid("alpha must be positive"));
        }
        if !(self.duration_us >= 0.0) {
            return Err(SsmError::invalid("pulse duration must be >= 0"));
        }
        if self.target.phase.iter().any(|p| !p.is_finite()) {
            return Err(SsmError::invalid("target profile has non-finite values"));
        }
        self.noise.validate()
    }

    /// Signed phase per intensity unit: `sign·α·T`.
    pub fn phase_per_intensity(&self) -> f64 {
        self.detuning_sign.factor() * self.alpha * self.duration_us
    }
}

/// SSM beam intensity profile I₀(y) realising a target phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsmIntensity {
    pub y: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Constant added to the target phase to keep the intensity non-negative.
    pub offset: f64,
}

/// Invert φ = sign·α·T·I for the beam intensity, adding the smallest global
/// phase offset that keeps I ≥ 0.
pub fn phase_to_intensity(profile: &PhaseProfile1D, pulse: &SsmPulse) -> Result<SsmIntensity> {
    pulse.validate()?;
    let offset = match pulse.detuning_sign {
        DetuningSign::Plus => (-profile.phase.iter().cloned().fold(f64::INFINITY, f64::min)).max(0.0),
        DetuningSign::Minus => (-profile.phase.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).min(0.0),
    };
    let scale = pulse.phase_per_intensity();
    if scale == 0.0 {
        if profile.phase.iter().all(|&p| p + offset == 0.0) {
            return Ok(SsmIntensity {
                y: profile.y.clone(),
                intensity: vec![0.0; profile.len()],
                offset,
            });
        }
        return Err(SsmError::invalid("zero pulse duration cannot impose a non-zero phase"));
    }
    let intensity = profile
        .phase
        .iter()
        .map(|&p| ((p + offset) / scale).max(0.0))
        .collect();
    Ok(SsmIntensity {
        y: profile.y.clone(),
        intensity,
        offset,
    })
}

/// Phase imposed by a noiseless intensity profile: `sign·α·T·I`.
pub fn intensity_to_phase(intensity: &SsmIntensity, pulse: &SsmPulse) -> PhaseProfile1D {
    let s = pulse.phase_per_intensity();
    PhaseProfile1D {
        y: intensity.y.clone(),
        phase: intensity.intensity.iter().map(|i| s * i).collect(),
    }
}

/// One draw of I(y, z) = I₀(y) + ΔI(y, z), stored row-major `ny × nz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityRealization {
    pub ny: usize,
    pub nz: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    /// Samples that went negative and were clipped to zero.
    pub clipped: usize,
    pub warnings: Vec<String>,
}

impl IntensityRealization {
    pub fn row(&self, iy: usize) -> &[f64] {
        &self.values[iy * self.nz..(iy + 1) * self.nz]
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped as f64 / self.values.len().max(1) as f64
    }
}

/// Draw longitudinal intensity noise for every y row.
///
/// Each row gets independent zero-mean Gaussian values per correlation cell
/// with standard deviation `sigma_rel·I₀(y)`; slice `j` samples the cell
/// containing its centre. Fails when more than 1 % of samples clip.
pub fn realize_noise(i0: &[f64], noise: &SsmNoiseModel, nz: usize, seed: u64) -> Result<IntensityRealization> {
    noise.validate()?;
    if nz < 16 {
        return Err(SsmError::invalid(format!("need at least 16 slices, got {nz}")));
    }
    let n_cells = noise.n_cells();
    let mut warnings = Vec::new();
    if nz < n_cells {
        let w = format!("{nz} slices under-resolve {n_cells} independent noise cells");
        log::warn!("{w}");
        warnings.push(w);
    }
    let cell_of: Vec<usize> = (0..nz)
        .map(|j| {
            let z = (j as f64 + 0.5) * noise.ensemble_length_um / nz as f64;
            ((z / noise.corr_length_um) as usize).min(n_cells - 1)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(i0.len() * nz);
    let mut clipped = 0;
    let mut cells = vec![0.0; n_cells];
    for &base in i0 {
        if noise.sigma_rel == 0.0 {
            values.extend(std::iter::repeat_n(base, nz));
            continue;
        }
        for c in cells.iter_mut() {
            *c = StandardNormal.sample(&mut rng);
        }
        let sigma = noise.sigma_rel * base;
        for &c in &cell_of {
            let v = base + sigma * cells[c];
            if v < 0.0 {
                clipped += 1;
                values.push(0.0);
            } else {
                values.push(v);
            }
        }
    }
    let real = IntensityRealization {
        ny: i0.len(),
        nz,
        values,
        seed,
        clipped,
        warnings,
    };
    if real.clipped_fraction() > 0.01 {
        return Err(SsmError::ExcessiveClipping {
            fraction: real.clipped_fraction(),
        });
    }
    Ok(real)
}

/// Noise-free realisation: every slice carries I₀(y).
pub fn noiseless_realization(i0: &[f64], nz: usize) -> IntensityRealization {
    IntensityRealization {
        ny: i0.len(),
        nz,
        values: i0.iter().flat_map(|&v| std::iter::repeat_n(v, nz)).collect(),
        seed: 0,
        clipped: 0,
        warnings: Vec::new(),
    }
}

/// Amplitude factor `exp(−γφ²)` left after averaging the phase noise.
pub fn decoherence_envelope(phi: f64, gamma: f64) -> f64 {
    (-gamma * phi * phi).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of `|⟨exp(i·x)⟩|` for x ~ N(0, s²) with
/// `s = alpha_t_sigma`; the closed form is `exp(−s²/2)`.
pub fn mc_decoherence_amplitude(alpha_t_sigma: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples < 1000 {
        return Err(SsmError::invalid(format!("need at least 1000 samples, got {n_samples}")));
    }
    if !alpha_t_sigma.is_finite() {
        return Err(SsmError::invalid("alpha_t_sigma must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_samples as f64;
    let (mut sc, mut ss, mut scc, mut sss, mut scs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_samples {
        let z: f64 = StandardNormal.sample(&mut rng);
        let (s, c) = (alpha_t_sigma * z).sin_cos();
        sc += c;
        ss += s;
        scc += c * c;
        sss += s * s;
        scs += c * s;
    }
    let (mc, ms) = (sc / n, ss / n);
    let value = mc.hypot(ms);
    let (vc, vs, cv) = (scc / n - mc * mc, sss / n - ms * ms, scs / n - mc * ms);
    // delta method for |m| = sqrt(mc² + ms²)
    let std_error = if value > 0.0 {
        ((mc * mc * vc + ms * ms * vs + 2.0 * mc * ms * cv) / (value * value * n)).max(0.0).sqrt()
    } else {
        ((vc + vs) / n).sqrt()
    };
    Ok(McEstimate { value, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid2D {
        Grid2D::default()
    }

    fn pulse(target: PhaseProfile1D, alpha_t: f64, sign: DetuningSign) -> SsmPulse {
        SsmPulse::new(target, alpha_t, 1.0, sign, SsmNoiseModel::noiseless()).unwrap()
    }

    #[test]
    fn lens_hand_evaluation() {
        // (2π/780e-9)·(1e-4)²/(2·0.125)
        let k = 2.0 * PI / 780e-9;
        let expect = k * 1e-8 / 0.25;
        assert!((expect - 0.322).abs() < 1e-3);
        let g = Grid2D::new(8, 512, 1.0, 100.0 / 3.0).unwrap();
        let p = lens_phase(&g, 125.0, 780.0).unwrap();
        let iy = 256 + 3; // y = 100 µm
        assert_relative_eq!(p.y[iy], 100.0, epsilon = 1e-9);
        assert_relative_eq!(p.phase[iy], expect, max_relative = 1e-12);
    }

    #[test]
    fn lens_vertex_and_sign_symmetry() {
        let a = lens_phase(&grid(), 82.0, 780.0).unwrap();
        let b = lens_phase(&grid(), -82.0, 780.0).unwrap();
        assert_eq!(a.phase[256], 0.0);
        assert!(a.phase.iter().zip(&b.phase).all(|(x, y)| *x == -*y));
        assert!(lens_phase(&grid(), 0.0, 780.0).is_err());
    }

    #[test]
    fn step_profiles() {
        let hard = step_phase(&grid(), 0.0, PI, 0.0).unwrap();
        assert_eq!(hard.phase[0], 0.0);
        assert_eq!(hard.phase[511], PI);
        assert_eq!(hard.phase[256], PI / 2.0);
        let flat = step_phase(&grid(), 0.0, 0.0, 15.0).unwrap();
        assert!(flat.phase.iter().all(|&p| p == 0.0));
        let y0 = grid().y(300);
        let soft = step_phase(&grid(), y0, 2.5, 20.0).unwrap();
        assert_relative_eq!(soft.phase[300], 1.25, epsilon = 1e-15);
        // 10–90 % span equals edge_width
        let s = 20.0 / (2.0 * 9f64.ln());
        assert_relative_eq!(2.5 / (1.0 + (-(10.0) / s).exp()), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn sawtooth_wraps_and_unwraps() {
        let g = 2.0 * PI / 100.0;
        let wrapped = sawtooth_phase(&grid(), g, 2.0 * PI).unwrap();
        let open = sawtooth_phase(&grid(), g, f64::INFINITY).unwrap();
        assert!(wrapped.phase.iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
        let unwrapped = crate::field::unwrap_1d(&wrapped.phase);
        let d0 = unwrapped[0] - open.phase[0];
        for (u, o) in unwrapped.iter().zip(&open.phase) {
            assert!((u - o - d0).abs() < 1e-9);
        }
        assert!(sawtooth_phase(&grid(), 0.0, 2.0 * PI).unwrap().phase.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn flat_phase_to_intensity() {
        let prof = PhaseProfile1D::from_fn(&grid(), |_| 1.0);
        let p = pulse(prof.clone(), 0.5, DetuningSign::Plus);
        let i = phase_to_intensity(&prof, &p).unwrap();
        assert_eq!(i.offset, 0.0);
        assert!(i.intensity.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn negative_sign_inverts_step() {
        let prof = step_phase(&grid(), 0.0, PI, 0.0).unwrap();
        let p = pulse(prof.clone(), 1.0, DetuningSign::Minus);
        let i = phase_to_intensity(&prof, &p).unwrap();
        assert_eq!(i.offset.abs(), PI);
        assert!(i.intensity[0] > i.intensity[511]);
        assert_eq!(i.intensity[511], 0.0);
    }

    #[test]
    fn intensity_phase_round_trip() {
        for sign in [DetuningSign::Plus, DetuningSign::Minus] {
            let prof = lens_phase(&grid(), -163.0, 780.0).unwrap();
            let p = SsmPulse::new(prof.clone(), 0.7, 2.5, sign, SsmNoiseModel::noiseless()).unwrap();
            let i = phase_to_intensity(&prof, &p).unwrap();
            assert!(i.intensity.iter().all(|&v| v >= 0.0));
            let back = intensity_to_phase(&i, &p);
            for (b, t) in back.phase.iter().zip(&prof.phase) {
                assert!((b - (t + i.offset)).abs() < 1e-12 * (1.0 + t.abs()));
            }
        }
    }

    #[test]
    fn zero_duration_rejects_nonzero_profile() {
        let prof = step_phase(&grid(), 0.0, 1.0, 0.0).unwrap();
        let p = SsmPulse::new(prof.clone(), 1.0, 0.0, DetuningSign::Plus, SsmNoiseModel::noiseless()).unwrap();
        assert!(phase_to_intensity(&prof, &p).is_err());
        let zero = PhaseProfile1D::zeros(&grid());
        assert!(phase_to_intensity(&zero, &p).is_ok());
    }

    #[test]
    fn noiseless_realization_is_exact() {
        let i0: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let r = realize_noise(&i0, &SsmNoiseModel::noiseless(), 64, 1).unwrap();
        for (iy, &v0) in i0.iter().enumerate() {
            assert!(r.row(iy).iter().all(|&v| v == v0));
        }
    }

    #[test]
    fn relative_noise_level_matches() {
        let noise = SsmNoiseModel {
            sigma_rel: 0.06,
            corr_length_um: 1.0,
            ensemble_length_um: 10_000.0,
        };
        let r = realize_noise(&[5.0], &noise, 10_000, 42).unwrap();
        let row = r.row(0);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (row.len() - 1) as f64;
        let rel = var.sqrt() / mean;
        assert!((rel - 0.06).abs() < 0.002, "relative std {rel}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn realization_is_deterministic() {
        let i0 = vec![1.0; 40];
        let a = realize_noise(&i0, &SsmNoiseModel::default(), 256, 9).unwrap();
        let b = realize_noise(&i0, &SsmNoiseModel::default(), 256, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.warnings.len(), 1, "256 slices under-resolve 270 cells");
    }

    #[test]
    fn variance_scales_quadratically_with_base() {
        let noise = SsmNoiseModel {
            sigma_rel: 0.1,
            corr_length_um: 1.0,
            ensemble_length_um: 20_000.0,
        };
        let r = realize_noise(&[1.0, 4.0], &noise, 20_000, 3).unwrap();
        let stats = |row: &[f64]| {
            let m = row.iter().sum::<f64>() / row.len() as f64;
            (m, row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / row.len() as f64)
        };
        let (m1, v1) = stats(r.row(0));
        let (m4, v4) = stats(r.row(1));
        assert!((m1 - 1.0).abs() < 0.003 && (m4 - 4.0).abs() < 0.012);
        assert!((v4 / v1 - 16.0).abs() < 0.8);
    }

    #[test]
    fn heavy_noise_fails_on_clipping() {
        let noise = SsmNoiseModel {
            sigma_rel: 0.6,
            ..SsmNoiseModel::default()
        };
        assert!(matches!(
            realize_noise(&[1.0; 8], &noise, 512, 0),
            Err(SsmError::ExcessiveClipping { .. })
        ));
    }

    #[test]
    fn envelope_values() {
        assert_eq!(decoherence_envelope(0.0, 0.042), 1.0);
        assert!((decoherence_envelope(PI, 0.042) - 0.6607).abs() < 1e-4);
        assert!((gamma_from_sigma_rel(0.29) - 0.042).abs() < 5e-4);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        assert_eq!(mc_decoherence_amplitude(0.0, 1000, 1).unwrap().value, 1.0);
        let e1 = mc_decoherence_amplitude(1.0, 100_000, 5).unwrap();
        assert!((e1.value - (-0.5f64).exp()).abs() < 0.005);
        let e2 = mc_decoherence_amplitude(2.0, 100_000, 6).unwrap();
        assert!((e2.value - (-2.0f64).exp()).abs() < 0.01);
        assert!(mc_decoherence_amplitude(1.0, 999, 1).is_err());
    }

    #[test]
    fn envelope_equals_monte_carlo_through_gamma_identity() {
        let gamma = 0.042;
        for (i, phi) in [0.5, 1.0, 2.0, PI].into_iter().enumerate() {
            let mc = mc_decoherence_amplitude(sigma_rel_from_gamma(gamma) * phi, 100_000, 100 + i as u64).unwrap();
            let closed = decoherence_envelope(phi, gamma);
            assert!((mc.value - closed).abs() <= 3.0 * mc.std_error.max(1e-12), "phi={phi}: {} vs {closed}", mc.value);
        }
    }
}
