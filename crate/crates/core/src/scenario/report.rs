use serde::{Deserialize, Serialize};

/// Where an acceptance threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceSource {
    /// A value reported for the physical experiment.
    Published,
    /// Follows from the model itself (closed-loop recovery, analytic result).
    Derived,
}

/// One reported number, optionally checked against bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub source: ToleranceSource,
    /// `None` for informational metrics without bounds.
    pub passed: Option<bool>,
}

impl Metric {
    pub fn info(name: &str, value: f64, unit: &str, source: ToleranceSource) -> Self {
        Metric {
            name: name.into(),
            value,
            unit: unit.into(),
            lower: None,
            upper: None,
            source,
            passed: None,
        }
    }

    pub fn bounded(name: &str, value: f64, unit: &str, lower: Option<f64>, upper: Option<f64>, source: ToleranceSource) -> Self {
        let ok = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Metric {
            name: name.into(),
            value,
            unit: unit.into(),
            lower,
            upper,
            source,
            passed: Some(ok),
        }
    }

    pub fn at_least(name: &str, value: f64, unit: &str, lower: f64, source: ToleranceSource) -> Self {
        Metric::bounded(name, value, unit, Some(lower), None, source)
    }

    pub fn at_most(name: &str, value: f64, unit: &str, upper: f64, source: ToleranceSource) -> Self {
        Metric::bounded(name, value, unit, None, Some(upper), source)
    }

    pub fn within(name: &str, value: f64, unit: &str, target: f64, tol: f64, source: ToleranceSource) -> Self {
        Metric::bounded(name, value, unit, Some(target - tol), Some(target + tol), source)
    }
}

/// Result of one scenario run. Contains no wall-clock data so that reruns
/// with the same config serialise identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub passed: bool,
    pub warnings: Vec<String>,
    /// Files written next to the report, relative to the output directory.
    pub outputs: Vec<String>,
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64) -> Self {
        ScenarioReport {
            scenario: scenario.into(),
            seed,
            metrics: Vec::new(),
            passed: true,
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn push(&mut self, m: Metric) {
        if m.passed == Some(false) {
            self.passed = false;
        }
        self.metrics.push(m);
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_and_pass_state() {
        let mut r = ScenarioReport::new("x", 1);
        r.push(Metric::within("a", 0.21, "rad", 0.2, 0.03, ToleranceSource::Published));
        r.push(Metric::info("b", f64::NAN, "", ToleranceSource::Derived));
        assert!(r.passed);
        r.push(Metric::at_least("c", 0.5, "", 0.9, ToleranceSource::Derived));
        assert!(!r.passed);
        assert_eq!(r.metric("c").unwrap().passed, Some(false));
        assert_eq!(Metric::at_most("nan", f64::NAN, "", 1.0, ToleranceSource::Derived).passed, Some(false));
        let json = serde_json::to_string(&r.metrics[0]).unwrap();
        assert!(json.contains("\"published\""));
    }
}
