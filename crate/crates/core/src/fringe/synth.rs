use crate::error::{Result, SsmError};
use crate::field::{same_grid, ComplexField, Grid2D};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Transverse profile of the reference beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceEnvelope {
    Flat,
    /// Gaussian amplitude `exp(−r²/w²)` centred on the grid origin.
    Gaussian { waist_um: f64 },
}

/// Tilted plane-wave reference `√P·env(r)·exp(−iK₀·r)`.
///
/// With this sign the `+K₀` sideband of the interferogram carries `+φ` of
/// the readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBeam {
    /// Carrier (rad/µm).
    pub tilt_kx: f64,
    pub tilt_ky: f64,
    /// Peak intensity in photo-electrons per pixel.
    pub power: f64,
    pub envelope: ReferenceEnvelope,
}

impl Default for ReferenceBeam {
    /// 22 mrad tilt at 780 nm split equally between the two axes.
    fn default() -> Self {
        ReferenceBeam::from_tilt_mrad(22.0, 45.0, 780.0, 10.0)
    }
}

impl ReferenceBeam {
    /// Build from a tilt angle and the azimuth (degrees from the x axis).
    pub fn from_tilt_mrad(tilt_mrad: f64, azimuth_deg: f64, wavelength_nm: f64, power: f64) -> Self {
        let k = crate::ssm::wavenumber(wavelength_nm) * (tilt_mrad * 1e-3).sin();
        let a = azimuth_deg.to_radians();
        ReferenceBeam {
            tilt_kx: k * a.cos(),
            tilt_ky: k * a.sin(),
            power,
            envelope: ReferenceEnvelope::Flat,
        }
    }

    pub fn k0(&self) -> f64 {
        self.tilt_kx.hypot(self.tilt_ky)
    }

    /// Fringe period in samples along the carrier direction.
    pub fn period_samples(&self, grid: &Grid2D) -> f64 {
        let (ux, uy) = (self.tilt_kx / self.k0(), self.tilt_ky / self.k0());
        let pitch = (ux * grid.pitch_x).hypot(uy * grid.pitch_y);
        2.0 * PI / self.k0() / pitch
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.k0() > 0.0) || !self.power.is_finite() || self.power < 0.0 {
            return Err(SsmError::invalid("reference needs a non-zero tilt and a non-negative power"));
        }
        if let ReferenceEnvelope::Gaussian { waist_um } = self.envelope {
            if !(waist_um > 0.0) {
                return Err(SsmError::invalid("reference waist must be positive"));
            }
        }
        let period = self.period_samples(grid);
        if period < 4.0 {
            return Err(SsmError::FringeNyquist { period_samples: period });
        }
        Ok(())
    }

    pub fn render(&self, grid: &Grid2D) -> Result<Array2<Complex64>> {
        self.validate(grid)?;
        let amp = self.power.sqrt();
        let env = self.envelope;
        Ok(Array2::from_shape_fn(grid.shape(), |(iy, ix)| {
            let (x, y) = (grid.x(ix), grid.y(iy));
            let e = match env {
                ReferenceEnvelope::Flat => 1.0,
                ReferenceEnvelope::Gaussian { waist_um } => (-(x * x + y * y) / (waist_um * waist_um)).exp(),
            };
            Complex64::from_polar(amp * e, -(self.tilt_kx * x + self.tilt_ky * y))
        }))
    }
}

/// Gaussian random walk of the global interferometer phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    /// rad per frame.
    pub step_std: f64,
    pub seed: u64,
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_std >= 0.0) || !self.step_std.is_finite() {
            return Err(SsmError::invalid("drift step_std must be finite and >= 0"));
        }
        Ok(())
    }

    /// Phase for each of `n` frames, starting at 0.
    pub fn series(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut phi = 0.0;
        Ok((0..n)
            .map(|i| {
                if i > 0 {
                    let z: f64 = rng.sample(StandardNormal);
                    phi += self.step_std * z;
                }
                phi
            })
            .collect())
    }
}

/// Intensified camera. Intensity enters in photo-electrons per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Counts per photo-electron.
    pub gain: f64,
    pub read_noise_std: f64,
    pub shot_noise: bool,
    /// Variance multiplier of the gain stage; 1 is a noiseless amplifier.
    pub excess_noise_factor: f64,
    pub bit_depth: u32,
    pub pixel_pitch_um: f64,
    pub frame_rate_hz: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            gain: 10.0,
            read_noise_std: 5.0,
            shot_noise: true,
            excess_noise_factor: 2.0,
            bit_depth: 12,
            pixel_pitch_um: 3.25,
            frame_rate_hz: 200.0,
        }
    }
}

impl CameraModel {
    /// No noise of any kind; only quantisation and clamping remain.
    pub fn ideal(gain: f64, bit_depth: u32) -> Self {
        CameraModel {
            gain,
            read_noise_std: 0.0,
            shot_noise: false,
            excess_noise_factor: 1.0,
            bit_depth,
            ..CameraModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0) {
            return Err(SsmError::invalid("camera gain must be positive"));
        }
        if !(8..=16).contains(&self.bit_depth) {
            return Err(SsmError::invalid(format!("bit depth {} outside 8..=16", self.bit_depth)));
        }
        if !(self.read_noise_std >= 0.0) || !(self.excess_noise_factor >= 1.0) {
            return Err(SsmError::invalid("read noise must be >= 0 and the excess noise factor >= 1"));
        }
        if !(self.pixel_pitch_um > 0.0) || !(self.frame_rate_hz > 0.0) {
            return Err(SsmError::invalid("pixel pitch and frame rate must be positive"));
        }
        Ok(())
    }

    pub fn max_count(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    /// Expose an intensity map (photo-electrons per pixel). Noise is drawn
    /// from a stream derived from `(seed, frame_index)` so frames can be
    /// produced in any order.
    pub fn capture(&self, grid: Grid2D, intensity: &Array2<f64>, seed: u64, frame_index: usize) -> CameraFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(frame_index as u64);
        let mut saturated = 0;
        let counts = intensity.mapv(|n| {
            let (c, sat) = self.expose(n, &mut rng);
            saturated += sat as usize;
            c
        });
        if saturated > 0 {
            log::warn!("frame {frame_index}: {saturated} saturated pixels");
        }
        CameraFrame {
            grid,
            counts,
            frame_index,
            timestamp: frame_index as f64 / self.frame_rate_hz,
            saturated,
        }
    }

    /// Convert one intensity sample to counts.
    fn expose(&self, electrons: f64, rng: &mut ChaCha8Rng) -> (u16, bool) {
        let mut n = electrons.max(0.0);
        if self.shot_noise && n > 0.0 {
            n = Poisson::new(n).map(|p| p.sample(rng)).unwrap_or(0.0);
        }
        if self.excess_noise_factor > 1.0 && n > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            n += ((self.excess_noise_factor - 1.0) * n).sqrt() * z;
        }
        let mut c = self.gain * n;
        if self.read_noise_std > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            c += self.read_noise_std * z;
        }
        let c = c.round();
        let max = self.max_count() as f64;
        if c >= max {
            (self.max_count(), true)
        } else {
            (c.max(0.0) as u16, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub grid: Grid2D,
    pub counts: Array2<u16>,
    pub frame_index: usize,
    /// Seconds since the first frame.
    pub timestamp: f64,
    pub saturated: usize,
}

impl CameraFrame {
    pub fn to_f64(&self) -> Array2<f64> {
        self.counts.mapv(f64::from)
    }
}

/// A reference beam and camera bound to a grid, with the reference field
/// rendered once.
#[derive(Debug, Clone)]
pub struct Interferometer {
    pub grid: Grid2D,
    pub reference: ReferenceBeam,
    pub camera: CameraModel,
    ref_field: Array2<Complex64>,
}

impl Interferometer {
    pub fn new(grid: Grid2D, reference: ReferenceBeam, camera: CameraModel) -> Result<Self> {
        camera.validate()?;
        let ref_field = reference.render(&grid)?;
        Ok(Interferometer {
            grid,
            reference,
            camera,
            ref_field,
        })
    }

    /// Noiseless intensity `Σⱼ |Aⱼ·e^{iΦⱼ} + R|²` in photo-electrons. Several
    /// readouts exposed onto one frame each interfere with the reference.
    pub fn intensity(&self, parts: &[(&ComplexField, f64)]) -> Result<Array2<f64>> {
        for (f, _) in parts {
            same_grid(&f.grid, &self.grid)?;
        }
        let r = &self.ref_field;
        let mut out = Array2::<f64>::zeros(self.grid.shape());
        if parts.is_empty() {
            out.zip_mut_with(r, |o, c| *o = c.norm_sqr());
        }
        for (f, phi) in parts {
            let rot = Complex64::from_polar(1.0, *phi);
            ndarray::Zip::from(&mut out)
                .and(&f.values)
                .and(r)
                .for_each(|o, a, c| *o += (a * rot + c).norm_sqr());
        }
        Ok(out)
    }

    /// One camera frame of the interferogram.
    pub fn frame(&self, parts: &[(&ComplexField, f64)], seed: u64, frame_index: usize) -> Result<CameraFrame> {
        let intensity = self.intensity(parts)?;
        Ok(self.camera.capture(self.grid, &intensity, seed, frame_index))
    }
}
/// Single readout, single frame.
pub fn synth_interferogram(
    readout: &ComplexField,
    reference: &ReferenceBeam,
    drift_phase: f64,
    camera: &CameraModel,
    seed: u64,
) -> Result<CameraFrame> {
    Interferometer::new(readout.grid, *reference, *camera)?.frame(&[(readout, drift_phase)], seed, 0)
}
