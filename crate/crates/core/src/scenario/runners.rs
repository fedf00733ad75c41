//! One function per named scenario.

use super::config::ScenarioConfig;
use super::output::Outputs;
use super::pipeline::{derive_seed, Bench};
use super::report::{Metric, ScenarioReport, ToleranceSource::*};
use crate::error::{Result, StageContext};
use crate::field::{efficiency, overlap_fidelity, roi_from_readout, wrap_phase, ComplexField};
use crate::fringe::{
    decoherence_map, delta_phi_stats, extract_phase, fit_gamma, fit_parabola_phase, phase_fidelity, split_windows,
    track_global_phase, AnalyticSignal, ExtractOptions, ParabolaOptions, SplitAxis,
};
use crate::memory::readout;
use crate::optics::{
    apply_physical_lens, check_aliasing, fit_waist_model, measure_waist, simulate_waist_curve, to_far_field, PhysicalLens,
    WaistSimConfig,
};
use crate::ssm::{lens_phase, mc_decoherence_amplitude, sawtooth_phase, step_phase, wavenumber, SsmNoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

// Stream labels for derived seeds.
const S_NOISE: u64 = 1;
const S_IMAGE: u64 = 2;
const S_REF_RUN: u64 = 3;
const S_MOD_RUN: u64 = 4;
const S_DRIFT_REF: u64 = 5;
const S_DRIFT_MOD: u64 = 6;
const S_JITTER: u64 = 7;
const S_MEASURE: u64 = 8;

fn repeat_seed(seed: u64, repeat: usize, stream: u64) -> u64 {
    derive_seed(derive_seed(seed, 1000 + repeat as u64), stream)
}

/// Flat-phase reference run and modulated runs of the same spin-wave,
/// all through the full camera pipeline with the reference run's window.
struct RunSet {
    reference: AnalyticSignal,
    modulated: Vec<AnalyticSignal>,
    roi: crate::field::Roi,
}

fn run_set(
    bench: &Bench,
    reference_field: &ComplexField,
    modulated_fields: &[&ComplexField],
    seed: u64,
    mut out: Option<&mut Outputs>,
) -> Result<RunSet> {
    let n = bench.cfg.n_frames;
    let roi = bench.roi(reference_field, derive_seed(seed, S_IMAGE)).stage("readout ROI")?;
    let d_ref = bench.drift(derive_seed(seed, S_DRIFT_REF), n)?;
    let r = bench.run(
        &[reference_field],
        &[d_ref],
        n,
        derive_seed(seed, S_REF_RUN),
        None,
        out.as_deref_mut().map(|o| (o, "frames_reference")),
    )?;
    let mut modulated = Vec::with_capacity(modulated_fields.len());
    for (i, f) in modulated_fields.iter().enumerate() {
        let sub = derive_seed(seed, 10 + i as u64);
        let d = bench.drift(derive_seed(sub, S_DRIFT_MOD), n)?;
        let name = format!("frames_modulated_{i}");
        let m = bench.run(
            &[*f],
            &[d],
            n,
            derive_seed(sub, S_MOD_RUN),
            Some(&r.analyzer),
            out.as_deref_mut().map(|o| (o, name.as_str())),
        )?;
        modulated.push(m.average);
    }
    Ok(RunSet {
        reference: r.average,
        modulated,
        roi,
    })
}

/// Readout of an unmodulated spin-wave and of copies carrying each target,
/// every pulse with its own noise draw.
fn readouts(
    bench: &Bench,
    targets: Vec<crate::ssm::PhaseProfile1D>,
    noise: SsmNoiseModel,
    seed: u64,
    report: &mut ScenarioReport,
) -> Result<(ComplexField, Vec<ComplexField>)> {
    let state = bench.spin_wave()?;
    let (reference, _) = readout(&state, 1.0)?;
    let mut out = Vec::with_capacity(targets.len());
    for (i, target) in targets.into_iter().enumerate() {
        let pulse = bench.pulse(target, noise)?;
        let (imprinted, warnings) = bench
            .imprint(&state, &pulse, derive_seed(derive_seed(seed, S_NOISE), i as u64))
            .stage("ssm pulse")?;
        for w in warnings {
            report.warn(w);
        }
        let (modulated, _) = readout(&imprinted, 1.0)?;
        check_aliasing(&modulated).stage("imposed phase")?;
        out.push(modulated);
    }
    Ok((reference, out))
}

fn roi_rows(grid: &crate::field::Grid2D, roi: &crate::field::Roi) -> Vec<f64> {
    (roi.y0..roi.y1).map(|iy| grid.y(iy)).collect()
}

pub(crate) fn lens_compensation(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = cfg.params.lens_compensation;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let bench = Bench::new(cfg)?;
    let target = lens_phase(&bench.grid, p.ssm_focal_mm, cfg.imaging.wavelength_nm)?;
    let (plain, mut modulated) = readouts(&bench, vec![target], cfg.noise, cfg.seed, &mut report)?;
    let modulated = modulated.remove(0);
    let lens = PhysicalLens::new(p.physical_focal_mm)?;

    let far = |f: &ComplexField| to_far_field(f, &cfg.imaging).stage("far field");
    let unaberrated = far(&plain)?;
    let aberrated = far(&apply_physical_lens(&plain, &lens, &cfg.imaging)?)?;
    let compensated = far(&apply_physical_lens(&modulated, &lens, &cfg.imaging)?)?;

    // One photon scale for all three images, set by the unaberrated peak.
    let peak = unaberrated.values.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let scale = num_complex::Complex64::from((p.far_field_photons / peak).sqrt());
    let frames = cfg.analysis.readout_image_frames;
    let image = |f: &ComplexField, stream: u64| bench.direct_image(&f.scaled(scale), frames, derive_seed(cfg.seed, 100 + stream));
    let i_ref = image(&unaberrated, 0)?;
    let i_ab = image(&aberrated, 1)?;
    let i_comp = image(&compensated, 2)?;
    let roi = roi_from_readout(&i_ref, p.roi_sigmas).stage("far-field ROI")?;

    let fid = overlap_fidelity(&i_comp, &i_ref, &roi)?;
    let eta = efficiency(&i_comp, &i_ref, &roi)?.eta;
    report.push(Metric::at_least("fidelity_compensated", fid, "", 0.95, Published));
    report.push(Metric::at_least("efficiency_compensated", eta, "", 0.75, Published));
    report.push(Metric::info("fidelity_aberrated", overlap_fidelity(&i_ab, &i_ref, &roi)?, "", Derived));
    report.push(Metric::info("efficiency_aberrated", efficiency(&i_ab, &i_ref, &roi)?.eta, "", Derived));
    let mut waists = Vec::new();
    for (name, img) in [("waist_unaberrated", &i_ref), ("waist_aberrated", &i_ab), ("waist_compensated", &i_comp)] {
        waists.push(measure_waist(img).stage(name)?);
        report.push(Metric::info(name, waists[waists.len() - 1], "mrad", Derived));
    }
    // A weak aberration leaves fidelity and efficiency high on its own, so
    // also require that most of the far-field broadening is undone.
    let removed = (waists[1] - waists[2]) / (waists[1] - waists[0]);
    report.push(Metric::at_least("aberration_removed", removed, "", 0.75, Derived));
    report.push(Metric::info(
        "effective_aberration_focal",
        lens.effective_focal_mm(&cfg.imaging),
        "mm",
        Derived,
    ));

    let (m_ref, m_ab, m_comp) = (i_ref.y_marginal(), i_ab.y_marginal(), i_comp.y_marginal());
    let ys = i_ref.grid.ys();
    out.csv(
        "far_field_profiles",
        &["angle_mrad", "unaberrated", "aberrated", "compensated"],
        (0..ys.len()).map(|i| vec![ys[i], m_ref[i], m_ab[i], m_comp[i]]),
    )?;
    out.map("far_field_unaberrated", &i_ref, "photo-electrons")?;
    out.map("far_field_aberrated", &i_ab, "photo-electrons")?;
    out.map("far_field_compensated", &i_comp, "photo-electrons")?;
    Ok(report)
}

pub(crate) fn waist_curve(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = cfg.params.waist_curve;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let sim = WaistSimConfig {
        imaging: cfg.imaging,
        n_samples: p.n_samples,
        pitch_um: cfg.grid.pitch_um,
    };
    let p_c = p.truth.compensation_power(&cfg.imaging);
    let powers: Vec<f64> = (0..p.n_points)
        .map(|i| p.max_power_factor * p_c * i as f64 / (p.n_points - 1) as f64)
        .collect();
    let clean = simulate_waist_curve(&p.truth, &powers, &sim).stage("waist curve")?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, S_MEASURE));
    let noise = Normal::new(0.0, p.noise_rel).map_err(|e| crate::SsmError::invalid(e.to_string()))?;
    let observed: Vec<(f64, f64)> = powers
        .iter()
        .zip(&clean)
        .flat_map(|(&pw, &w)| std::iter::repeat_n((pw, w), p.repeats))
        .map(|(pw, w)| (pw, w * (1.0 + noise.sample(&mut rng))))
        .collect();
    let fit = fit_waist_model(&observed, &sim, &p.initial).stage("waist fit")?;

    let t = p.truth;
    let m = fit.model;
    for (name, got, truth, unit) in [
        ("w_sw", m.w_sw_um, t.w_sw_um, "um"),
        ("gamma", m.gamma, t.gamma, ""),
        ("f_ph", m.f_ph_mm, t.f_ph_mm, "mm"),
        ("phase_scale", m.phase_scale, t.phase_scale, "rad"),
    ] {
        report.push(Metric::within(&format!("{name}_fitted"), got, unit, truth, 0.05 * truth.abs(), Derived));
    }
    report.push(Metric::info("compensation_power", p_c, "", Derived));
    report.push(Metric::info("fit_residual_rms", fit.residual_rms, "", Derived));

    let fitted = simulate_waist_curve(&m, &powers, &sim)?;
    let r = p.repeats;
    out.csv(
        "waist_curve",
        &["power", "w0_mean_mrad", "w0_clean_mrad", "w0_fit_mrad"],
        (0..powers.len()).map(|i| {
            let mean = observed[i * r..(i + 1) * r].iter().map(|o| o.1).sum::<f64>() / r as f64;
            vec![powers[i], mean, clean[i], fitted[i]]
        }),
    )?;
    out.csv("waist_measurements", &["power", "w0_mrad"], observed.iter().map(|o| vec![o.0, o.1]))?;
    out.json("waist_fit", &fit)?;
    Ok(report)
}

pub(crate) fn step_pi(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = cfg.params.step;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let bench = Bench::new(cfg)?;
    let target = step_phase(&bench.grid, p.y0_um, p.height, p.edge_width_um)?;
    let (plain, mut modulated) = readouts(&bench, vec![target.clone()], cfg.noise, cfg.seed, &mut report)?;
    let modulated = modulated.remove(0);
    let runs = run_set(&bench, &plain, &[&modulated], cfg.seed, Some(out))?;
    let roi = runs.roi;
    let ext = extract_phase(&runs.modulated[0], &runs.reference, &roi, &ExtractOptions::default())?;
    if ext.low_confidence {
        report.warn(format!("reference weak on {:.1}% of the ROI", 100.0 * ext.weak_fraction));
    }
    let want: Vec<f64> = (roi.y0..roi.y1).map(|iy| target.phase[iy]).collect();
    let fid = phase_fidelity(&ext.profile, &want)?;
    // Energy ratio from readout-only images; the analytic-signal ratio also
    // loses the part of the step edge cut off by the filter window.
    let frames = cfg.analysis.readout_image_frames;
    let i_mod = bench.direct_image(&modulated, frames, derive_seed(cfg.seed, 100))?;
    let i_ref = bench.direct_image(&plain, frames, derive_seed(cfg.seed, 101))?;
    let eta = efficiency(&i_mod, &i_ref, &roi)?.eta;
    let (h, h0) = (runs.modulated[0].h_map(), runs.reference.h_map());
    let gamma = cfg.noise.gamma();
    report.push(Metric::at_least("phase_fidelity", fid, "", 0.97, Published));
    report.push(Metric::bounded("efficiency", eta, "", Some(0.67), Some(0.82), Published));
    report.push(Metric::info("efficiency_analytic_signal", efficiency(&h, &h0, &roi)?.eta, "", Derived));
    report.push(Metric::info(
        "efficiency_predicted",
        0.5 * (1.0 + (-2.0 * gamma * p.height * p.height).exp()),
        "",
        Derived,
    ));

    let ys = roi_rows(&bench.grid, &roi);
    let offset = ext.profile.iter().zip(&want).map(|(m, t)| num_complex::Complex64::from_polar(1.0, m - t)).sum::<num_complex::Complex64>().arg();
    out.csv(
        "step_profile",
        &["y_um", "target_rad", "measured_rad"],
        (0..ys.len()).map(|i| vec![ys[i], want[i], want[i] + wrap_phase(ext.profile[i] - offset - want[i])]),
    )?;
    out.map("phase", &ext.phase, "rad")?;
    Ok(report)
}

pub(crate) fn ssm_lens(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = &cfg.params.ssm_lens;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let bench = Bench::new(cfg)?;
    let opts = ParabolaOptions {
        wavelength_nm: cfg.imaging.wavelength_nm,
        ..ParabolaOptions::default()
    };
    let k = wavenumber(cfg.imaging.wavelength_nm);
    let targets = p
        .focal_mm
        .iter()
        .map(|&f| lens_phase(&bench.grid, f, cfg.imaging.wavelength_nm))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    // focals[i][r], fids[i][r]
    let mut focals = vec![Vec::new(); p.focal_mm.len()];
    let mut fids = vec![Vec::new(); p.focal_mm.len()];
    for r in 0..p.repeats {
        let seed = repeat_seed(cfg.seed, r, 0);
        let (plain, modulated) = readouts(&bench, targets.clone(), cfg.noise, seed, &mut report)?;
        let refs: Vec<&ComplexField> = modulated.iter().collect();
        let runs = run_set(&bench, &plain, &refs, seed, None)?;
        let roi = runs.roi;
        for (i, &f) in p.focal_mm.iter().enumerate() {
            let ext = extract_phase(&runs.modulated[i], &runs.reference, &roi, &ExtractOptions::default())?;
            let fit = fit_parabola_phase(&ext.phase, &roi, &opts).stage("parabola fit")?;
            let (meas, want): (Vec<f64>, Vec<f64>) = roi
                .indices()
                .map(|(iy, ix)| {
                    let y = bench.grid.y(iy);
                    (ext.phase.values[[iy, ix]], k * y * y / (2.0 * f * 1e3))
                })
                .unzip();
            let fid = phase_fidelity(&meas, &want)?;
            rows.push(vec![f, r as f64, fit.focal_mm, fit.focal_err_mm, fit.y0_um, fid]);
            focals[i].push(fit.focal_mm);
            fids[i].push(fid);
        }
    }
    for (i, &f) in p.focal_mm.iter().enumerate() {
        let (focals, fids) = (&focals[i], &fids[i]);
        let n = focals.len() as f64;
        let mean = focals.iter().sum::<f64>() / n;
        let std = if focals.len() > 1 {
            (focals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            f64::NAN
        };
        let tag = format!("f{f}");
        report.push(Metric::within(&format!("{tag}_focal_mean"), mean, "mm", f, 0.05 * f, Published));
        let worst = focals.iter().map(|x| (x / f - 1.0).abs()).fold(0.0, f64::max);
        report.push(Metric::at_most(&format!("{tag}_focal_worst_rel_error"), worst, "", 0.05, Published));
        report.push(Metric::info(&format!("{tag}_focal_std"), std, "mm", Derived));
        let fid_mean = fids.iter().sum::<f64>() / n;
        report.push(Metric::at_least(&format!("{tag}_phase_fidelity_mean"), fid_mean, "", 0.95, Published));
    }
    out.csv("ssm_lens", &["focal_true_mm", "repeat", "focal_fit_mm", "focal_err_mm", "vertex_um", "phase_fidelity"], rows)?;
    Ok(report)
}

pub(crate) fn decoherence_gamma(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let f = cfg.params.gamma.focal_mm;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let bench = Bench::new(cfg)?;
    let target = lens_phase(&bench.grid, f, cfg.imaging.wavelength_nm)?;
    let (plain, modulated) = readouts(&bench, vec![target], cfg.noise, cfg.seed, &mut report)?;
    let runs = run_set(&bench, &plain, &[&modulated[0]], cfg.seed, Some(out))?;
    let roi = runs.roi;
    let ext = extract_phase(&runs.modulated[0], &runs.reference, &roi, &ExtractOptions::default())?;
    let opts = ParabolaOptions {
        wavelength_nm: cfg.imaging.wavelength_nm,
        ..ParabolaOptions::default()
    };
    let fit = fit_parabola_phase(&ext.phase, &roi, &opts).stage("parabola fit")?;

    // Imposed phase per row from the fitted lens, zero at its vertex.
    let k = wavenumber(cfg.imaging.wavelength_nm);
    let ys = roi_rows(&bench.grid, &roi);
    let phi: Vec<f64> = ys
        .iter()
        .map(|y| if fit.curvature_detected { k * (y - fit.y0_um).powi(2) / (2.0 * fit.focal_mm * 1e3) } else { 0.0 })
        .collect();
    let (h, h0) = (runs.modulated[0].h_map(), runs.reference.h_map());
    let floor = 1e-3 * roi.indices().map(|(iy, ix)| h0.values[[iy, ix]]).fold(0.0, f64::max);
    let map = decoherence_map(&h, &h0, &roi, floor).stage("decoherence map")?;
    let g = fit_gamma(&map, &phi).stage("gamma fit")?;

    report.push(Metric::within("gamma", g.gamma, "", 0.042, 0.010, Published));
    report.push(Metric::info("gamma_std_error", g.gamma_err, "", Derived));
    report.push(Metric::info("gamma_model", cfg.noise.gamma(), "", Derived));
    report.push(Metric::info("intercept", g.intercept, "", Derived));
    report.push(Metric::info("focal_fit", fit.focal_mm, "mm", Derived));
    report.push(Metric::info("excluded_fraction", map.excluded_fraction, "", Derived));

    let gamma_rows: Vec<f64> = (roi.y0..roi.y1)
        .map(|iy| {
            let v: Vec<f64> = (roi.x0..roi.x1).map(|ix| map.gamma.values[[iy, ix]]).filter(|v| v.is_finite()).collect();
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        })
        .collect();
    out.csv(
        "decoherence_rows",
        &["y_um", "phase_rad", "phase_sq", "decoherence"],
        (0..ys.len()).map(|i| vec![ys[i], phi[i], phi[i] * phi[i], gamma_rows[i]]),
    )?;
    out.map("decoherence", &map.gamma, "")?;
    out.map("phase", &ext.phase, "rad")?;
    Ok(report)
}

pub(crate) fn split_readout(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = cfg.params.split;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let bench = Bench::new(cfg)?;
    let n = cfg.n_frames;

    let state = bench.spin_wave()?;
    let (first, rest) = readout(&state, p.first_fraction).stage("first readout")?;
    let target = sawtooth_phase(&bench.grid, p.gradient, p.wrap)?;
    let pulse = bench.pulse(target, cfg.noise)?;
    let (shifted, warnings) = bench.imprint(&rest, &pulse, derive_seed(cfg.seed, S_NOISE)).stage("ssm pulse")?;
    for w in warnings {
        report.warn(w);
    }
    let (second, _) = readout(&shifted, p.second_fraction).stage("second readout")?;
    check_aliasing(&second).stage("imposed phase")?;

    let drift = bench.drift(derive_seed(cfg.seed, S_DRIFT_REF), n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, S_JITTER));
    let jitter = Normal::new(0.0, p.jitter_rad).map_err(|e| crate::SsmError::invalid(e.to_string()))?;
    let phi_in: Vec<(f64, f64)> = drift
        .iter()
        .map(|d| (d + jitter.sample(&mut rng), d + jitter.sample(&mut rng)))
        .collect();

    let seed = derive_seed(cfg.seed, S_MOD_RUN);
    let frame = |t: usize| bench.ifm.frame(&[(&first, phi_in[t].0), (&second, phi_in[t].1)], seed, t);
    let boundary = bench.k0.1 + 0.5 * p.gradient;
    let windows = split_windows(&frame(0)?, bench.k0, SplitAxis::Y, boundary).stage("split windows")?;
    let pairs: Vec<(AnalyticSignal, AnalyticSignal)> = (0..n)
        .into_par_iter()
        .map(|t| windows.filter(&frame(t)?))
        .collect::<Result<_>>()
        .stage("fourier filter")?;
    let (s1, s2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let t1 = track_global_phase(&s1, cfg.analysis.min_overlap, true)?;
    let t2 = track_global_phase(&s2, cfg.analysis.min_overlap, true)?;
    t1.require_all().stage("tracking first readout")?;
    t2.require_all().stage("tracking second readout")?;
    let stats = delta_phi_stats(&t1.phi, &t2.phi, p.rolling_window.min(n))?;

    // Regression of ΔΦ on the common-mode drift; 0 for perfect rejection.
    let slope = |ys: &[f64]| {
        let nf = ys.len() as f64;
        let (mx, my) = (drift.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
        let sxx: f64 = drift.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = drift.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        sxy / sxx
    };
    report.push(Metric::within("delta_phi_std", stats.std, "rad", 0.20, 0.03, Published));
    report.push(Metric::at_most("drift_leakage", slope(&stats.delta).abs(), "", 0.05, Derived));
    report.push(Metric::info("drift_response_first", slope(&t1.phi), "", Derived));
    report.push(Metric::info("drift_range", drift.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - drift.iter().cloned().fold(f64::INFINITY, f64::min), "rad", Derived));
    report.push(Metric::info("delta_phi_std_expected", p.jitter_rad * 2f64.sqrt(), "rad", Derived));
    report.push(Metric::info("sideband_separation", windows.separation_bins, "bins", Derived));

    out.csv(
        "phase_series",
        &["frame", "drift_rad", "phi_1_rad", "phi_2_rad", "delta_phi_rad"],
        (0..n).map(|t| vec![t as f64, drift[t], t1.phi[t], t2.phi[t], stats.delta[t]]),
    )?;
    out.csv(
        "delta_phi_rolling",
        &["start_frame", "rolling_mean_rad", "rolling_std_rad"],
        (0..stats.rolling_mean.len()).map(|i| vec![i as f64, stats.rolling_mean[i], stats.rolling_std[i]]),
    )?;
    Ok(report)
}

pub(crate) fn mc_oracle(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<ScenarioReport> {
    let p = &cfg.params.mc;
    let mut report = ScenarioReport::new(&cfg.scenario, cfg.seed);
    let mut rows = Vec::new();
    for (i, &s) in p.alpha_t_sigma.iter().enumerate() {
        let est = mc_decoherence_amplitude(s, p.n_samples, derive_seed(cfg.seed, 200 + i as u64))?;
        let exact = (-0.5 * s * s).exp();
        let z = (est.value - exact).abs() / est.std_error;
        report.push(Metric::at_most(&format!("z_score_{s}"), z, "std errors", 3.0, Derived));
        report.push(Metric::info(&format!("estimate_{s}"), est.value, "", Derived));
        rows.push(vec![s, est.value, est.std_error, exact]);
    }
    out.csv("mc_oracle", &["alpha_t_sigma", "estimate", "std_error", "exact"], rows)?;
    Ok(report)
}
