use thiserror::Error;

/// Errors raised anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum SsmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("fit failed: {reason}")]
    FitFailed {
        reason: String,
        /// Best parameters seen before giving up, when any were evaluated.
        best: Option<Vec<f64>>,
    },

    #[error("fidelity undefined: {0}")]
    UndefinedFidelity(String),

    #[error("insufficient spin-wave population: requested {requested}, remaining {remaining}")]
    InsufficientPopulation { requested: f64, remaining: f64 },

    #[error("aliasing: phase gradient {gradient:.3} rad/sample exceeds the {limit:.3} rad/sample limit")]
    Aliasing { gradient: f64, limit: f64 },

    #[error("fringe carrier violates Nyquist: period {period_samples:.2} samples (need >= 4)")]
    FringeNyquist { period_samples: f64 },

    #[error("filter window touches the zero-frequency component")]
    CarrierLeakage,

    #[error("sidebands overlap: measured separation {separation_bins:.2} bins")]
    SidebandOverlap { separation_bins: f64 },

    #[error("phase tracking failed on frame {frame}: overlap magnitude {magnitude:.3e}")]
    TrackingFailure { frame: usize, magnitude: f64 },

    #[error("intensity clipping on {fraction:.4} of samples exceeds the 1% limit")]
    ExcessiveClipping { fraction: f64 },

    #[error("too many excluded pixels: {fraction:.3} of the ROI")]
    ExcessiveExclusion { fraction: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<SsmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SsmError>;

impl SsmError {
    pub(crate) fn fit(reason: impl Into<String>) -> Self {
        SsmError::FitFailed {
            reason: reason.into(),
            best: None,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SsmError::InvalidArgument(msg.into())
    }
}

/// Attach a stage name to an error so callers can tell which part of a run failed.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| SsmError::Stage {
            stage: stage.to_string(),
            source: Box::new(e),
        })
    }
}
