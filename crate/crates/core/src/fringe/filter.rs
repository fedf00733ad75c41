use super::synth::CameraFrame;
use crate::error::{Result, SsmError};
use crate::field::{same_grid, unwrap_1d, ComplexField, Fft2Plan, Grid2D};
use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Rectangle in the centred spectrum, in bin indices. Covers
/// `cx-hx ..= cx+hx` by `cy-hy ..= cy+hy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterWindow {
    pub cx: usize,
    pub cy: usize,
    pub hx: usize,
    pub hy: usize,
}

impl FilterWindow {
    /// Window on `peak` whose half-widths, on both axes, are half the peak's
    /// distance to DC.
    pub fn around_peak(grid: &Grid2D, peak: (usize, usize)) -> Result<Self> {
        let kx = grid.kx(peak.0);
        let ky = grid.ky(peak.1);
        let half = 0.5 * kx.hypot(ky);
        let w = FilterWindow {
            cx: peak.0,
            cy: peak.1,
            hx: (half / grid.dk_x()).floor() as usize,
            hy: (half / grid.dk_y()).floor() as usize,
        };
        w.check(grid)?;
        Ok(w)
    }

    pub fn check(&self, grid: &Grid2D) -> Result<()> {
        if self.cx < self.hx || self.cy < self.hy || self.cx + self.hx >= grid.nx || self.cy + self.hy >= grid.ny {
            return Err(SsmError::invalid(format!("filter window {self:?} exceeds the spectrum")));
        }
        if self.contains(grid.nx / 2, grid.ny / 2) {
            return Err(SsmError::CarrierLeakage);
        }
        Ok(())
    }

    pub fn contains(&self, ix: usize, iy: usize) -> bool {
        ix.abs_diff(self.cx) <= self.hx && iy.abs_diff(self.cy) <= self.hy
    }

    pub fn shape(&self) -> (usize, usize) {
        (2 * self.hy + 1, 2 * self.hx + 1)
    }

    /// Window centre in rad/µm.
    pub fn center_k(&self, grid: &Grid2D) -> (f64, f64) {
        (grid.kx(self.cx), grid.ky(self.cy))
    }

    /// The point-mirrored window, which selects the conjugate sideband.
    pub fn mirrored(&self, grid: &Grid2D) -> Self {
        FilterWindow {
            cx: grid.nx - self.cx,
            cy: grid.ny - self.cy,
            ..*self
        }
    }
}

/// Strongest spectral bin inside a box around the expected carrier
/// `hint = (kx, ky)`. The box spans half the carrier magnitude on each side.
pub fn locate_sideband(spectrum: &Array2<Complex64>, grid: &Grid2D, hint: (f64, f64)) -> Result<(usize, usize)> {
    let half = 0.5 * hint.0.hypot(hint.1);
    let to_bin = |k: f64, dk: f64, n: usize| (k / dk).round() as i64 + (n / 2) as i64;
    let (bx, by) = (to_bin(hint.0, grid.dk_x(), grid.nx), to_bin(hint.1, grid.dk_y(), grid.ny));
    let (rx, ry) = ((half / grid.dk_x()) as i64, (half / grid.dk_y()) as i64);
    let (dcx, dcy) = ((grid.nx / 2) as i64, (grid.ny / 2) as i64);
    let mut best = None;
    let mut best_mag = 0.0;
    for iy in (by - ry).max(0)..=(by + ry).min(grid.ny as i64 - 1) {
        for ix in (bx - rx).max(0)..=(bx + rx).min(grid.nx as i64 - 1) {
            if ix == dcx && iy == dcy {
                continue;
            }
            let m = spectrum[[iy as usize, ix as usize]].norm_sqr();
            if m > best_mag {
                best_mag = m;
                best = Some((ix as usize, iy as usize));
            }
        }
    }
    best.ok_or_else(|| SsmError::invalid("no sideband found near the expected carrier"))
}

/// Band-limited analytic signal `h·exp[i(K₀·r + Δφ + φ)]`, stored as the
/// windowed part of the spectrum. The spatial field is built on first use.
#[derive(Debug, Clone)]
pub struct AnalyticSignal {
    pub grid: Grid2D,
    pub window: FilterWindow,
    /// Spectrum samples inside the window, shape `window.shape()`.
    pub spectrum: Array2<Complex64>,
    field: OnceLock<ComplexField>,
}

impl AnalyticSignal {
    pub fn new(grid: Grid2D, window: FilterWindow, spectrum: Array2<Complex64>) -> Result<Self> {
        window.check(&grid)?;
        if spectrum.dim() != window.shape() {
            return Err(SsmError::ShapeMismatch(format!(
                "window spectrum {:?} vs window {:?}",
                spectrum.dim(),
                window.shape()
            )));
        }
        Ok(AnalyticSignal {
            grid,
            window,
            spectrum,
            field: OnceLock::new(),
        })
    }

    /// Windowed energy, equal to the spatial energy of the signal.
    pub fn energy(&self) -> f64 {
        self.spectrum.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The spatial analytic signal.
    pub fn field(&self) -> &ComplexField {
        self.field.get_or_init(|| {
            let w = self.window;
            let mut full = Array2::<Complex64>::zeros(self.grid.shape());
            full.slice_mut(s![w.cy - w.hy..=w.cy + w.hy, w.cx - w.hx..=w.cx + w.hx])
                .assign(&self.spectrum);
            let plan = Fft2Plan::new(&self.grid).expect("grid validated at construction");
            plan.inverse(&mut full).expect("shape matches grid");
            ComplexField {
                grid: self.grid,
                values: full,
            }
        })
    }

    /// Intensity-like amplitude map `|analytic|²`.
    pub fn h_map(&self) -> crate::field::RealMap {
        self.field().intensity()
    }
}

/// Fourier filtering with a fixed window and a reusable FFT plan.
#[derive(Debug, Clone)]
pub struct FringeAnalyzer {
    pub grid: Grid2D,
    pub window: FilterWindow,
    plan: Fft2Plan,
}

impl FringeAnalyzer {
    pub fn new(grid: Grid2D, window: FilterWindow) -> Result<Self> {
        window.check(&grid)?;
        Ok(FringeAnalyzer {
            grid,
            window,
            plan: Fft2Plan::new(&grid)?,
        })
    }

    /// Window centred on the sideband found in `frame` near `k0_hint`.
    pub fn from_frame(frame: &CameraFrame, k0_hint: (f64, f64)) -> Result<Self> {
        let spec = spectrum(frame, &Fft2Plan::new(&frame.grid)?)?;
        let peak = locate_sideband(&spec, &frame.grid, k0_hint)?;
        FringeAnalyzer::new(frame.grid, FilterWindow::around_peak(&frame.grid, peak)?)
    }

    pub fn with_window(&self, window: FilterWindow) -> Result<Self> {
        window.check(&self.grid)?;
        Ok(FringeAnalyzer {
            window,
            ..self.clone()
        })
    }

    pub fn spectrum(&self, frame: &CameraFrame) -> Result<Array2<Complex64>> {
        same_grid(&frame.grid, &self.grid)?;
        spectrum(frame, &self.plan)
    }

    pub fn filter(&self, frame: &CameraFrame) -> Result<AnalyticSignal> {
        let spec = self.spectrum(frame)?;
        Ok(self.cut(&spec))
    }

    /// Apply several windows to one transform of the frame.
    pub fn filter_windows(&self, frame: &CameraFrame, windows: &[FilterWindow]) -> Result<Vec<AnalyticSignal>> {
        let spec = self.spectrum(frame)?;
        windows
            .iter()
            .map(|w| {
                w.check(&self.grid)?;
                Ok(cut(&self.grid, w, &spec))
            })
            .collect()
    }

    /// Filter a stack; frames are independent so this runs in parallel.
    pub fn filter_all(&self, frames: &[CameraFrame]) -> Result<Vec<AnalyticSignal>> {
        frames.par_iter().map(|f| self.filter(f)).collect()
    }

    fn cut(&self, spec: &Array2<Complex64>) -> AnalyticSignal {
        cut(&self.grid, &self.window, spec)
    }
}

fn cut(grid: &Grid2D, w: &FilterWindow, spec: &Array2<Complex64>) -> AnalyticSignal {
    let sub = spec.slice(s![w.cy - w.hy..=w.cy + w.hy, w.cx - w.hx..=w.cx + w.hx]).to_owned();
    AnalyticSignal {
        grid: *grid,
        window: *w,
        spectrum: sub,
        field: OnceLock::new(),
    }
}

fn spectrum(frame: &CameraFrame, plan: &Fft2Plan) -> Result<Array2<Complex64>> {
    let mut a = frame.counts.mapv(|c| Complex64::new(c as f64, 0.0));
    plan.forward(&mut a)?;
    Ok(a)
}

/// Keep only `window` of the frame's spectrum.
pub fn fourier_filter(frame: &CameraFrame, window: &FilterWindow) -> Result<AnalyticSignal> {
    FringeAnalyzer::new(frame.grid, *window)?.filter(frame)
}

/// Global phase per frame relative to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrack {
    /// rad; `phi[0] == 0`.
    pub phi: Vec<f64>,
    /// Normalised overlap |⟨Q(t)|Q(t₀)⟩| / (‖Q(t)‖‖Q(t₀)‖).
    pub overlap: Vec<f64>,
    /// Frames whose overlap fell below the threshold.
    pub flagged: Vec<usize>,
}

impl PhaseTrack {
    /// Error on the first flagged frame.
    pub fn require_all(&self) -> Result<()> {
        match self.flagged.first() {
            Some(&frame) => Err(SsmError::TrackingFailure {
                frame,
                magnitude: self.overlap[frame],
            }),
            None => Ok(()),
        }
    }
}

fn same_window(stack: &[AnalyticSignal]) -> Result<()> {
    let first = &stack[0];
    for (i, q) in stack.iter().enumerate() {
        if q.window != first.window || q.grid != first.grid {
            return Err(SsmError::ShapeMismatch(format!("frame {i} uses a different grid or window")));
        }
    }
    Ok(())
}

/// `Φ(t) = arg Σ_K Q(K,t)·conj Q(K,t₀)`, optionally unwrapped in time.
///
/// Frames whose normalised overlap with the first is below `min_overlap`
/// are flagged rather than rejected; see [`PhaseTrack::require_all`].
pub fn track_global_phase(stack: &[AnalyticSignal], min_overlap: f64, unwrap: bool) -> Result<PhaseTrack> {
    if stack.is_empty() {
        return Err(SsmError::invalid("phase tracking needs at least one frame"));
    }
    same_window(stack)?;
    let q0 = &stack[0].spectrum;
    let n0 = stack[0].energy().sqrt();
    if n0 == 0.0 {
        return Err(SsmError::TrackingFailure { frame: 0, magnitude: 0.0 });
    }
    let mut phi = Vec::with_capacity(stack.len());
    let mut overlap = Vec::with_capacity(stack.len());
    let mut flagged = Vec::new();
    for (t, q) in stack.iter().enumerate() {
        if t == 0 {
            phi.push(0.0);
            overlap.push(1.0);
            continue;
        }
        let dot: Complex64 = q.spectrum.iter().zip(q0.iter()).map(|(a, b)| a * b.conj()).sum();
        let norm = q.energy().sqrt() * n0;
        let m = if norm > 0.0 { dot.norm() / norm } else { 0.0 };
        if !(m >= min_overlap) {
            flagged.push(t);
        }
        overlap.push(m);
        phi.push(dot.arg());
    }
    if unwrap {
        phi = unwrap_1d(&phi);
    }
    Ok(PhaseTrack { phi, overlap, flagged })
}

/// Mean of `Q(t)·e^{−iΦ(t)}` over the stack, as a new analytic signal.
pub fn average_filtered(stack: &[AnalyticSignal], phi: &[f64]) -> Result<AnalyticSignal> {
    if stack.is_empty() {
        return Err(SsmError::invalid("cannot average an empty stack"));
    }
    if phi.len() != stack.len() {
        return Err(SsmError::ShapeMismatch(format!(
            "{} phases for {} frames",
            phi.len(),
            stack.len()
        )));
    }
    same_window(stack)?;
    let mut acc = Array2::<Complex64>::zeros(stack[0].spectrum.dim());
    for (q, p) in stack.iter().zip(phi) {
        let rot = Complex64::from_polar(1.0, -p);
        acc.zip_mut_with(&q.spectrum, |a, b| *a += b * rot);
    }
    acc.mapv_inplace(|c| c / stack.len() as f64);
    AnalyticSignal::new(stack[0].grid, stack[0].window, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_field;
    use crate::fringe::synth::{CameraModel, Interferometer, ReferenceBeam};

    fn grid() -> Grid2D {
        Grid2D::square(256, 3.25).unwrap()
    }

    fn ifm(cam: CameraModel) -> Interferometer {
        let r = ReferenceBeam { power: 400.0, ..ReferenceBeam::default() };
        Interferometer::new(grid(), r, cam).unwrap()
    }

    fn readout(phase: impl Fn(f64, f64) -> f64) -> ComplexField {
        let g = gaussian_field(&grid(), 120.0, 120.0, (0.0, 0.0)).unwrap();
        let mut out = g.clone();
        for iy in 0..grid().ny {
            for ix in 0..grid().nx {
                let (x, y) = (grid().x(ix), grid().y(iy));
                out.values[[iy, ix]] = g.values[[iy, ix]] * Complex64::from_polar(20.0, phase(x, y));
            }
        }
        out
    }

    fn exact_cam() -> CameraModel {
        CameraModel::ideal(16.0, 16)
    }

    #[test]
    fn window_geometry() {
        let g = Grid2D::default();
        let r = ReferenceBeam::default();
        let w = FilterWindow::around_peak(&g, (256 + 33, 256 + 33)).unwrap();
        assert_eq!((w.hx, w.hy), (23, 23));
        assert!(!w.contains(256, 256));
        assert!(r.k0() / g.dk_x() > 46.0);
        let dc = FilterWindow { cx: 260, cy: 258, hx: 10, hy: 10 };
        assert!(matches!(dc.check(&g), Err(SsmError::CarrierLeakage)));
    }

    #[test]
    fn filtered_amplitude_matches_readout() {
        let i = ifm(exact_cam());
        let a = readout(|_, _| 0.0);
        let frame = i.frame(&[(&a, 0.0)], 1, 0).unwrap();
        let an = FringeAnalyzer::from_frame(&frame, (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let q = an.filter(&frame).unwrap();
        // |analytic| = gain·|A|·|R| in counts, with |R| = 20.
        let scale = 16.0 * 20.0;
        let f = q.field();
        let (c, w) = (grid().nx / 2, 20);
        for iy in c - w..c + w {
            for ix in c - w..c + w {
                let expected = scale * a.values[[iy, ix]].norm();
                let got = f.values[[iy, ix]].norm();
                assert!((got / expected - 1.0).abs() < 0.01, "{got} vs {expected}");
            }
        }
    }

    #[test]
    fn conjugate_window_negates_phase() {
        let i = ifm(exact_cam());
        let a = readout(|_, y| 1e-4 * y * y);
        let flat = readout(|_, _| 0.0);
        let fa = i.frame(&[(&a, 0.0)], 1, 0).unwrap();
        let f0 = i.frame(&[(&flat, 0.0)], 1, 0).unwrap();
        let an = FringeAnalyzer::from_frame(&f0, (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let conj = an.with_window(an.window.mirrored(&grid())).unwrap();
        let (p, p0) = (an.filter(&fa).unwrap(), an.filter(&f0).unwrap());
        let (m, m0) = (conj.filter(&fa).unwrap(), conj.filter(&f0).unwrap());
        let c = grid().nx / 2;
        for iy in c - 30..c + 30 {
            let plus = (p.field().values[[iy, c]] * p0.field().values[[iy, c]].conj()).arg();
            let minus = (m.field().values[[iy, c]] * m0.field().values[[iy, c]].conj()).arg();
            assert!((plus + minus).abs() < 1e-9, "{plus} {minus}");
        }
    }

    #[test]
    fn pure_dc_frame_has_no_sideband_energy() {
        let i = ifm(exact_cam());
        let frame = i.frame(&[], 1, 0).unwrap();
        let w = FilterWindow::around_peak(&grid(), (128 + 17, 128 + 17)).unwrap();
        let q = fourier_filter(&frame, &w).unwrap();
        assert!(q.energy() < 1e-12 * frame.to_f64().iter().map(|c| c * c).sum::<f64>());
        assert!(matches!(
            track_global_phase(&[q.clone(), q], 0.1, false),
            Err(SsmError::TrackingFailure { frame: 0, .. })
        ));
    }

    #[test]
    fn tracks_constructed_phase_step() {
        let i = ifm(exact_cam());
        let a = readout(|_, _| 0.0);
        let f1 = i.frame(&[(&a, 0.0)], 1, 0).unwrap();
        let an = FringeAnalyzer::from_frame(&f1, (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let q1 = an.filter(&f1).unwrap();
        let rot = Complex64::from_polar(1.0, 0.3);
        let q2 = AnalyticSignal::new(q1.grid, q1.window, q1.spectrum.mapv(|c| c * rot)).unwrap();
        let t = track_global_phase(&[q1.clone(), q2], 0.1, false).unwrap();
        assert_eq!(t.phi[0], 0.0);
        assert!((t.phi[1] - 0.3).abs() < 1e-12);
        let self_t = track_global_phase(&[q1.clone(), q1], 0.1, false).unwrap();
        assert_eq!(self_t.phi[1], 0.0);
    }

    #[test]
    fn identical_frames_average_to_themselves() {
        let i = ifm(exact_cam());
        let a = readout(|_, y| 2e-4 * y * y);
        let f = i.frame(&[(&a, 0.0)], 1, 0).unwrap();
        let an = FringeAnalyzer::from_frame(&f, (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let q = an.filter(&f).unwrap();
        let avg = average_filtered(&[q.clone(), q.clone(), q.clone()], &[0.0; 3]).unwrap();
        let err = avg.spectrum.iter().zip(q.spectrum.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
        assert!(average_filtered(&[], &[]).is_err());
    }

    #[test]
    fn uncompensated_drift_washes_out() {
        let i = ifm(exact_cam());
        let a = readout(|_, _| 0.0);
        let drift: Vec<f64> = (0..16).map(|t| t as f64 * 2.0 * std::f64::consts::PI / 16.0).collect();
        let frames: Vec<_> = drift.iter().enumerate().map(|(t, d)| i.frame(&[(&a, *d)], 1, t).unwrap()).collect();
        let an = FringeAnalyzer::from_frame(&frames[0], (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let stack = an.filter_all(&frames).unwrap();
        let single = stack[0].energy().sqrt();
        let naive = average_filtered(&stack, &[0.0; 16]).unwrap().energy().sqrt();
        assert!(naive < 0.5 * single);
        let track = track_global_phase(&stack, 0.1, true).unwrap();
        let fixed = average_filtered(&stack, &track.phi).unwrap().energy().sqrt();
        assert!((fixed / single - 1.0).abs() < 1e-3);
        for (got, want) in track.phi.iter().zip(&drift) {
            assert!((got - want).abs() < 1e-3, "{got} {want}");
        }
    }

    #[test]
    fn filtering_commutes_with_averaging() {
        // Averaging compensated spectra equals filtering the average frame.
        let i = ifm(CameraModel::default());
        let a = readout(|_, y| 1e-4 * y * y);
        let frames: Vec<_> = (0..6).map(|t| i.frame(&[(&a, 0.1 * t as f64)], 4, t).unwrap()).collect();
        let an = FringeAnalyzer::from_frame(&frames[0], (i.reference.tilt_kx, i.reference.tilt_ky)).unwrap();
        let stack = an.filter_all(&frames).unwrap();
        let phi = vec![0.0; 6];
        let avg = average_filtered(&stack, &phi).unwrap();
        let mut mean = Array2::<Complex64>::zeros(grid().shape());
        for f in &frames {
            mean.zip_mut_with(&f.counts, |m, c| *m += Complex64::new(*c as f64 / 6.0, 0.0));
        }
        let plan = Fft2Plan::new(&grid()).unwrap();
        plan.forward(&mut mean).unwrap();
        let w = an.window;
        let direct = mean.slice(s![w.cy - w.hy..=w.cy + w.hy, w.cx - w.hx..=w.cx + w.hx]);
        let err = avg.spectrum.iter().zip(direct.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
