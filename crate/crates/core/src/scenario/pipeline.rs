//! Building blocks shared by the interferometric scenarios.

use super::config::ScenarioConfig;
use super::output::Outputs;
use crate::error::{Result, SsmError, StageContext};
use crate::field::{fit_gaussian_2d, gaussian_field, roi_from_readout, ComplexField, Grid2D, RealMap, Roi};
use crate::fringe::{
    average_filtered, stack_io::StackManifest, track_global_phase, AnalyticSignal, CameraFrame, DriftModel,
    FringeAnalyzer, Interferometer,
};
use crate::memory::{apply_ssm, write_in_with_slices, SpinWaveState};
use crate::ssm::{phase_to_intensity, realize_noise, PhaseProfile1D, SsmNoiseModel, SsmPulse};
use ndarray::Array2;
use rayon::prelude::*;

/// Independent sub-seed for a labelled stream (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) struct Bench<'a> {
    pub cfg: &'a ScenarioConfig,
    pub grid: Grid2D,
    pub ifm: Interferometer,
    pub k0: (f64, f64),
}

pub(crate) struct RunResult {
    pub analyzer: FringeAnalyzer,
    pub average: AnalyticSignal,
}

impl<'a> Bench<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let grid = cfg.grid.grid()?;
        let reference = cfg.reference.beam(cfg.imaging.wavelength_nm);
        let ifm = Interferometer::new(grid, reference, cfg.camera)?;
        Ok(Bench {
            cfg,
            grid,
            ifm,
            k0: (reference.tilt_kx, reference.tilt_ky),
        })
    }

    /// Fresh spin-wave whose full readout peaks at `peak_photons`.
    pub fn spin_wave(&self) -> Result<SpinWaveState> {
        let w = self.cfg.spin_wave.waist_um;
        let g = gaussian_field(&self.grid, w, w, (0.0, 0.0))?.scaled(self.cfg.spin_wave.peak_photons.sqrt().into());
        Ok(write_in_with_slices(&g, self.cfg.spin_wave.slices))
    }

    pub fn pulse(&self, target: PhaseProfile1D, noise: SsmNoiseModel) -> Result<SsmPulse> {
        let p = &self.cfg.pulse;
        SsmPulse::new(target, p.alpha, p.duration_us, p.detuning_sign, noise)
    }

    /// Apply one noisy SSM pulse; warnings from the noise draw are returned.
    pub fn imprint(&self, state: &SpinWaveState, pulse: &SsmPulse, seed: u64) -> Result<(SpinWaveState, Vec<String>)> {
        let i0 = phase_to_intensity(&pulse.target, pulse)?;
        let real = realize_noise(&i0.intensity, &pulse.noise, state.nz, seed)?;
        let next = apply_ssm(state, pulse, &real)?;
        Ok((next, real.warnings))
    }

    /// Camera image of a field alone (no reference), in photo-electrons,
    /// averaged over `frames` exposures.
    pub fn direct_image(&self, field: &ComplexField, frames: usize, seed: u64) -> Result<RealMap> {
        let intensity = field.intensity().values;
        let cam = self.cfg.camera;
        let mut acc = Array2::<f64>::zeros(intensity.dim());
        let shots: Vec<CameraFrame> = (0..frames)
            .into_par_iter()
            .map(|t| cam.capture(field.grid, &intensity, seed, t))
            .collect();
        for f in &shots {
            acc.zip_mut_with(&f.counts, |a, c| *a += *c as f64);
        }
        acc.mapv_inplace(|v| v / (frames as f64 * cam.gain));
        RealMap::new(field.grid, acc)
    }

    /// ROI from a Gaussian fit to the readout-only image.
    pub fn roi(&self, field: &ComplexField, seed: u64) -> Result<Roi> {
        let img = self.direct_image(field, self.cfg.analysis.readout_image_frames, seed)?;
        fit_gaussian_2d(&img).stage("readout-image fit")?;
        roi_from_readout(&img, self.cfg.analysis.roi_sigmas)
    }

    /// Expose `n` frames of `fields[j]` with per-frame phases `phases[j][t]`,
    /// filter them, track and average. The filter window comes from frame 0
    /// unless an analyzer is supplied.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &self,
        fields: &[&ComplexField],
        phases: &[Vec<f64>],
        n: usize,
        seed: u64,
        analyzer: Option<&FringeAnalyzer>,
        save: Option<(&mut Outputs, &str)>,
    ) -> Result<RunResult> {
        if fields.len() != phases.len() || phases.iter().any(|p| p.len() != n) {
            return Err(SsmError::ShapeMismatch("one phase series per field and frame expected".into()));
        }
        let frame = |t: usize| {
            let parts: Vec<(&ComplexField, f64)> = fields.iter().zip(phases).map(|(f, p)| (*f, p[t])).collect();
            self.ifm.frame(&parts, seed, t)
        };
        let analyzer = match analyzer {
            Some(a) => a.clone(),
            None => FringeAnalyzer::from_frame(&frame(0)?, self.k0).stage("sideband search")?,
        };
        let stack: Vec<AnalyticSignal> = (0..n)
            .into_par_iter()
            .map(|t| analyzer.filter(&frame(t)?))
            .collect::<Result<_>>()
            .stage("fourier filter")?;
        let track = track_global_phase(&stack, self.cfg.analysis.min_overlap, true)?;
        track.require_all().stage("phase tracking")?;
        let average = average_filtered(&stack, &track.phi)?;
        if let Some((out, name)) = save {
            let keep = self.cfg.output.save_frames.min(n);
            if keep > 0 {
                let frames: Vec<CameraFrame> = (0..keep).map(frame).collect::<Result<_>>()?;
                let m = StackManifest::new(&self.grid, keep, seed, &self.ifm.reference, &self.cfg.camera);
                out.frames(name, &m, &frames)?;
            }
        }
        Ok(RunResult {
            analyzer,
            average,
        })
    }

    /// Drift series for one run.
    pub fn drift(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        DriftModel {
            step_std: self.cfg.drift.step_std,
            seed,
        }
        .series(n)
    }
}
