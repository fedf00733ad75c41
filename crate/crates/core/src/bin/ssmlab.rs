use clap::{Parser, Subcommand};
use serde_json::Value;
use ssmlab::scenario::{list_scenarios, load_config, preset, run_scenario, validate_document, ScenarioReport};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Spatial spin-wave modulation simulator and analysis pipeline.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario and check it against its acceptance thresholds.
    Run {
        scenario: String,
        /// JSON config overlaid on the scenario preset; must contain a seed.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one key, e.g. `--set camera.gain=3.0`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Directory for report.json, tables and optional frames.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { file: PathBuf },
    /// List scenarios.
    List,
    /// Print the default config of a scenario.
    Preset { scenario: String },
}

enum Failure {
    Threshold,
    Error(String),
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Shortest rendering up to six decimals, so bounds such as `0.042 + 0.010`
/// don't print their float noise.
fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn print_report(r: &ScenarioReport) {
    for m in &r.metrics {
        let status = match m.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "    ",
        };
        let bounds = match (m.lower, m.upper) {
            (Some(l), Some(u)) => format!("[{}, {}]", num(l), num(u)),
            (Some(l), None) => format!(">= {}", num(l)),
            (None, Some(u)) => format!("<= {}", num(u)),
            (None, None) => String::new(),
        };
        println!("{status} {:<36} {:>14.6} {:<8} {bounds}", m.name, m.value, m.unit);
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::List => {
            for s in list_scenarios() {
                println!("{:<20} {}", s.name, s.description);
            }
            Ok(())
        }
        Command::Preset { scenario } => {
            let doc = preset(&scenario).map_err(|e| Failure::Error(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&doc).expect("preset serialises"));
            Ok(())
        }
        Command::Validate { file } => {
            let doc = read_json(&file).map_err(Failure::Error)?;
            let problems = validate_document(&doc);
            if problems.is_empty() {
                println!("{}: ok", file.display());
                Ok(())
            } else {
                for p in &problems {
                    eprintln!("{p}");
                }
                Err(Failure::Error(format!("{} problem(s) in {}", problems.len(), file.display())))
            }
        }
        Command::Run {
            scenario,
            config,
            sets,
            out,
        } => {
            let file = config.as_deref().map(read_json).transpose().map_err(Failure::Error)?;
            let cfg = load_config(&scenario, file.as_ref(), &sets).map_err(|e| Failure::Error(e.to_string()))?;
            let start = Instant::now();
            let report = run_scenario(&cfg, out.as_deref()).map_err(|e| Failure::Error(e.to_string()))?;
            print_report(&report);
            println!(
                "{}: {} in {:.1} s",
                report.scenario,
                if report.passed { "passed" } else { "FAILED" },
                start.elapsed().as_secs_f64()
            );
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Threshold)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Threshold) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
