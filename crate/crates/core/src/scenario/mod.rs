//! Named experiments: configuration, registry and reports.

pub mod config;
mod output;
mod pipeline;
pub mod report;
mod runners;

pub use config::{apply_set, from_value, merge, ScenarioConfig};
pub use output::Outputs;
pub use pipeline::derive_seed;
pub use report::{Metric, ScenarioReport, ToleranceSource};

use crate::error::{Result, SsmError};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;
use std::time::Instant;

type Runner = fn(&ScenarioConfig, &mut Outputs) -> Result<ScenarioReport>;

#[derive(Clone, Copy)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    run: Runner,
}

impl std::fmt::Debug for ScenarioInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioInfo").field("name", &self.name).finish()
    }
}

const REGISTRY: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "lens-compensation",
        description: "SSM lens cancels a cylindrical aberration in the far field",
        run: runners::lens_compensation,
    },
    ScenarioInfo {
        name: "waist-curve",
        description: "far-field waist against SSM power, fitted back to its parameters",
        run: runners::waist_curve,
    },
    ScenarioInfo {
        name: "step-pi",
        description: "pi phase step retrieved interferometrically, with efficiency",
        run: runners::step_pi,
    },
    ScenarioInfo {
        name: "ssm-lens",
        description: "focal length of imposed SSM lenses recovered from the phase map",
        run: runners::ssm_lens,
    },
    ScenarioInfo {
        name: "decoherence-gamma",
        description: "quadratic decoherence coefficient from amplitude maps",
        run: runners::decoherence_gamma,
    },
    ScenarioInfo {
        name: "split-readout",
        description: "phase difference of two readouts sharing one camera frame",
        run: runners::split_readout,
    },
    ScenarioInfo {
        name: "mc-oracle",
        description: "Monte-Carlo check of the Gaussian phase-averaging law",
        run: runners::mc_oracle,
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static ScenarioInfo> {
    REGISTRY.iter().find(|s| s.name == name)
}

/// Seed used by presets when no config file supplies one.
pub const PRESET_SEED: u64 = 20_240_611;

/// Default configuration document for a scenario.
pub fn preset(name: &str) -> Result<Value> {
    if find(name).is_none() {
        return Err(SsmError::Config(format!("scenario: unknown scenario `{name}`")));
    }
    let cfg = ScenarioConfig::defaults(name, PRESET_SEED);
    let mut doc = serde_json::to_value(cfg)?;
    if name == "split-readout" {
        // Weaker SSM noise: the saw-tooth spans a full 2π, and the phase
        // difference should be limited by the per-readout jitter.
        merge(&mut doc, &json!({"noise": {"sigma_rel": 0.06}, "n_frames": 500}));
    }
    Ok(doc)
}

/// Build a config: the scenario preset, overlaid by the file (which must
/// carry a seed), then by each `key=value` assignment.
pub fn load_config(scenario: &str, file: Option<&Value>, sets: &[String]) -> Result<ScenarioConfig> {
    let mut doc = preset(scenario)?;
    if let Some(f) = file {
        if !f.is_object() {
            return Err(SsmError::Config("config file must hold a JSON object".into()));
        }
        if f.get("seed").is_none_or(Value::is_null) {
            return Err(SsmError::Config("seed: missing (every run needs an explicit seed)".into()));
        }
        if let Some(s) = f.get("scenario").and_then(Value::as_str) {
            if s != scenario {
                return Err(SsmError::Config(format!("scenario: file is for `{s}`, not `{scenario}`")));
            }
        }
        merge(&mut doc, f);
    }
    for s in sets {
        apply_set(&mut doc, s)?;
    }
    from_value(doc)
}

/// Check a config document without running anything. Returns every problem.
pub fn validate_document(doc: &Value) -> Vec<String> {
    if !doc.is_object() {
        return vec!["config file must hold a JSON object".into()];
    }
    let scenario = match doc.get("scenario").and_then(Value::as_str) {
        Some(s) => s,
        None => return vec!["scenario: missing".into()],
    };
    let mut problems = Vec::new();
    if doc.get("seed").is_none_or(Value::is_null) {
        problems.push("seed: missing (every run needs an explicit seed)".to_string());
    }
    let mut merged = match preset(scenario) {
        Ok(p) => p,
        Err(e) => {
            problems.push(e.to_string().trim_start_matches("config: ").to_string());
            return problems;
        }
    };
    merge(&mut merged, doc);
    match serde_json::from_value::<ScenarioConfig>(merged) {
        Ok(cfg) => problems.extend(cfg.problems()),
        Err(e) => problems.push(e.to_string()),
    }
    problems
}

#[derive(Serialize)]
struct Timing<'a> {
    scenario: &'a str,
    wall_clock_s: f64,
}

/// Run a validated config. With an output directory, the report, resolved
/// config, data tables and a separate `timing.json` are written there.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioReport> {
    cfg.validate()?;
    let info = find(&cfg.scenario).ok_or_else(|| SsmError::Config(format!("unknown scenario `{}`", cfg.scenario)))?;
    let start = Instant::now();
    let mut out = Outputs::new(out_dir, cfg.output.save_maps)?;
    out.json("config", cfg)?;
    log::info!("running {} (seed {})", info.name, cfg.seed);
    let mut report = (info.run)(cfg, &mut out)?;
    let elapsed = start.elapsed().as_secs_f64();
    report.outputs = std::mem::take(&mut out.files);
    report.outputs.push("report.json".into());
    if let Some(d) = out.dir() {
        std::fs::write(d.join("report.json"), serde_json::to_string_pretty(&report)?)?;
        let timing = Timing {
            scenario: info.name,
            wall_clock_s: elapsed,
        };
        std::fs::write(d.join("timing.json"), serde_json::to_string_pretty(&timing)?)?;
    }
    log::info!("{} finished in {elapsed:.1} s, passed = {}", info.name, report.passed);
    Ok(report)
}
