use crate::error::{Result, SsmError};
use crate::field::Grid2D;
use crate::fringe::{CameraModel, ReferenceBeam, ReferenceEnvelope};
use crate::optics::{ImagingConfig, WaistFitModel};
use crate::ssm::{DetuningSign, SsmNoiseModel};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub pitch_um: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 512,
            ny: 512,
            pitch_um: 3.25,
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.pitch_um, self.pitch_um)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpinWaveConfig {
    /// 1/e amplitude radius of the stored excitation (µm).
    pub waist_um: f64,
    pub slices: usize,
    /// Readout intensity at the beam centre for a full readout, in
    /// photo-electrons per pixel per frame.
    pub peak_photons: f64,
}

impl Default for SpinWaveConfig {
    fn default() -> Self {
        SpinWaveConfig {
            waist_um: 150.0,
            slices: 512,
            peak_photons: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseConfig {
    /// Phase per unit intensity per µs.
    pub alpha: f64,
    pub duration_us: f64,
    pub detuning_sign: DetuningSign,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            alpha: 1.0,
            duration_us: 3.0,
            detuning_sign: DetuningSign::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub tilt_mrad: f64,
    /// Direction of the carrier, degrees from the x axis.
    pub azimuth_deg: f64,
    /// Photo-electrons per pixel per frame.
    pub power: f64,
    /// Gaussian envelope radius; absent for a flat reference.
    pub waist_um: Option<f64>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            tilt_mrad: 22.0,
            azimuth_deg: 45.0,
            power: 20.0,
            waist_um: None,
        }
    }
}

impl ReferenceConfig {
    pub fn beam(&self, wavelength_nm: f64) -> ReferenceBeam {
        let mut b = ReferenceBeam::from_tilt_mrad(self.tilt_mrad, self.azimuth_deg, wavelength_nm, self.power);
        if let Some(w) = self.waist_um {
            b.envelope = ReferenceEnvelope::Gaussian { waist_um: w };
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    /// rad per frame.
    pub step_std: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig { step_std: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// ROI half-size in Gaussian σ of the readout-only image.
    pub roi_sigmas: f64,
    /// Normalised overlap below which a frame counts as lost by the tracker.
    pub min_overlap: f64,
    /// Frames averaged for the readout-only image.
    pub readout_image_frames: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            roi_sigmas: 2.0,
            min_overlap: 0.1,
            readout_image_frames: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LensCompensationParams {
    pub physical_focal_mm: f64,
    pub ssm_focal_mm: f64,
    /// Far-field peak in photo-electrons per pixel of the reference image.
    pub far_field_photons: f64,
    pub roi_sigmas: f64,
}

impl Default for LensCompensationParams {
    fn default() -> Self {
        LensCompensationParams {
            physical_focal_mm: -2000.0,
            ssm_focal_mm: 125.0,
            far_field_photons: 300.0,
            roi_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaistCurveParams {
    pub truth: WaistFitModel,
    pub initial: WaistFitModel,
    pub n_points: usize,
    /// Independent measurements at each power.
    pub repeats: usize,
    /// Scan from 0 to this multiple of the compensation power.
    pub max_power_factor: f64,
    /// Relative measurement noise on each waist.
    pub noise_rel: f64,
    pub n_samples: usize,
}

impl Default for WaistCurveParams {
    fn default() -> Self {
        WaistCurveParams {
            truth: WaistFitModel::default(),
            initial: WaistFitModel {
                w_sw_um: 130.0,
                gamma: 0.03,
                f_ph_mm: -2300.0,
                phase_scale: 0.45,
            },
            n_points: 61,
            repeats: 16,
            max_power_factor: 16.0,
            noise_rel: 0.02,
            n_samples: 8192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepParams {
    pub height: f64,
    pub y0_um: f64,
    /// 10–90 % edge width (µm).
    pub edge_width_um: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            height: PI,
            y0_um: 0.0,
            edge_width_um: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsmLensParams {
    pub focal_mm: Vec<f64>,
    pub repeats: usize,
}

impl Default for SsmLensParams {
    fn default() -> Self {
        SsmLensParams {
            focal_mm: vec![82.0, 163.0, 401.0],
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaParams {
    pub focal_mm: f64,
}

impl Default for GammaParams {
    fn default() -> Self {
        GammaParams { focal_mm: 82.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitParams {
    /// Saw-tooth gradient (rad/µm) applied between the two readouts.
    pub gradient: f64,
    pub wrap: f64,
    pub first_fraction: f64,
    pub second_fraction: f64,
    /// Independent phase jitter of each readout, rad RMS.
    pub jitter_rad: f64,
    pub rolling_window: usize,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            gradient: 2.0 * PI / 100.0,
            wrap: 2.0 * PI,
            first_fraction: 0.5,
            second_fraction: 0.5,
            jitter_rad: 0.14,
            rolling_window: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McParams {
    pub alpha_t_sigma: Vec<f64>,
    pub n_samples: usize,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            alpha_t_sigma: vec![0.5, 1.0, 2.0],
            n_samples: 100_000,
        }
    }
}

/// Parameters only some scenarios read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ScenarioParams {
    pub lens_compensation: LensCompensationParams,
    pub waist_curve: WaistCurveParams,
    pub step: StepParams,
    pub ssm_lens: SsmLensParams,
    pub gamma: GammaParams,
    pub split: SplitParams,
    pub mc: McParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputConfig {
    /// Frames of the first run pair written to disk per run (0 = none).
    pub save_frames: usize,
    /// Write float32 maps next to the report.
    pub save_maps: bool,
}

/// Everything a scenario run depends on. `seed` has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub imaging: ImagingConfig,
    #[serde(default)]
    pub spin_wave: SpinWaveConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub noise: SsmNoiseModel,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_frames")]
    pub n_frames: usize,
    #[serde(default)]
    pub params: ScenarioParams,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_frames() -> usize {
    200
}

impl ScenarioConfig {
    /// All defaults for `scenario`.
    pub fn defaults(scenario: &str, seed: u64) -> Self {
        ScenarioConfig {
            scenario: scenario.to_string(),
            seed,
            grid: Default::default(),
            imaging: Default::default(),
            spin_wave: Default::default(),
            pulse: Default::default(),
            noise: Default::default(),
            camera: Default::default(),
            reference: Default::default(),
            drift: Default::default(),
            analysis: Default::default(),
            n_frames: default_frames(),
            params: Default::default(),
            output: Default::default(),
        }
    }

    /// Every problem found, each naming the offending key.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn check(out: &mut Vec<String>, ok: bool, msg: &str) {
            if !ok {
                out.push(msg.to_string());
            }
        }
        if super::find(&self.scenario).is_none() {
            out.push(format!("scenario: unknown scenario `{}`", self.scenario));
        }
        let g = &self.grid;
        check(&mut out, g.pitch_um > 0.0 && g.pitch_um.is_finite(), "grid.pitch_um: must be positive");
        check(&mut out, g.nx >= 8 && g.nx.is_multiple_of(2), "grid.nx: must be even and >= 8");
        check(&mut out, g.ny >= 8 && g.ny.is_multiple_of(2), "grid.ny: must be even and >= 8");
        if let Err(e) = self.imaging.validate() {
            out.push(format!("imaging: {e}"));
        }
        let s = &self.spin_wave;
        check(&mut out, s.waist_um > 0.0, "spin_wave.waist_um: must be positive");
        check(&mut out, s.slices >= 16, "spin_wave.slices: must be >= 16");
        check(&mut out, s.peak_photons > 0.0, "spin_wave.peak_photons: must be positive");
        let p = &self.pulse;
        check(&mut out, p.alpha > 0.0 && p.alpha.is_finite(), "pulse.alpha: must be positive");
        check(&mut out, p.duration_us > 0.0 && p.duration_us.is_finite(), "pulse.duration_us: must be positive");
        if let Err(e) = self.noise.validate() {
            out.push(format!("noise: {e}"));
        }
        if let Err(e) = self.camera.validate() {
            out.push(format!("camera: {e}"));
        }
        let r = &self.reference;
        check(&mut out, r.tilt_mrad > 0.0, "reference.tilt_mrad: must be positive");
        check(&mut out, r.power >= 0.0, "reference.power: must be >= 0");
        check(&mut out, r.waist_um.is_none_or(|w| w > 0.0), "reference.waist_um: must be positive");
        if out.is_empty() {
            if let Ok(grid) = g.grid() {
                if let Err(e) = r.beam(self.imaging.wavelength_nm).validate(&grid) {
                    out.push(format!("reference: {e}"));
                }
            }
        }
        check(&mut out, self.drift.step_std >= 0.0, "drift.step_std: must be >= 0");
        let a = &self.analysis;
        check(&mut out, a.roi_sigmas > 0.0, "analysis.roi_sigmas: must be positive");
        check(&mut out, (0.0..1.0).contains(&a.min_overlap), "analysis.min_overlap: must be in [0, 1)");
        check(&mut out, a.readout_image_frames >= 1, "analysis.readout_image_frames: must be >= 1");
        check(&mut out, self.n_frames >= 1, "n_frames: must be >= 1");
        let sp = &self.params.split;
        check(
            &mut out,
            sp.first_fraction > 0.0 && sp.second_fraction > 0.0 && sp.first_fraction + sp.second_fraction <= 1.0 + 1e-12,
            "params.split: readout fractions must be positive and sum to <= 1",
        );
        check(&mut out, sp.rolling_window >= 1, "params.split.rolling_window: must be >= 1");
        check(&mut out, self.params.ssm_lens.repeats >= 1, "params.ssm_lens.repeats: must be >= 1");
        check(&mut out, self.params.waist_curve.n_points >= 8, "params.waist_curve.n_points: must be >= 8");
        check(&mut out, self.params.waist_curve.repeats >= 1, "params.waist_curve.repeats: must be >= 1");
        check(&mut out, self.params.mc.n_samples >= 1000, "params.mc.n_samples: must be >= 1000");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(SsmError::Config(p.join("; ")))
        }
    }
}

/// Recursively overlay `over` onto `base`; objects merge, anything else replaces.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Apply `a.b.c=value`. The value is parsed as JSON when possible and kept
/// as a string otherwise. Intermediate objects are created as needed.
pub fn apply_set(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| SsmError::Config(format!("`{assignment}` is not of the form key=value")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(SsmError::Config(format!("bad key path `{path}`")));
    }
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| SsmError::Config(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last key")
}

/// Parse a merged document, naming a missing seed explicitly.
pub fn from_value(doc: Value) -> Result<ScenarioConfig> {
    match doc.get("seed") {
        None | Some(Value::Null) => return Err(SsmError::Config("seed: missing (every run needs an explicit seed)".into())),
        _ => {}
    }
    let cfg: ScenarioConfig = serde_json::from_value(doc).map_err(|e| SsmError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
