//! Off-axis interferometry: frame synthesis with a camera model, and the
//! analysis chain from raw frames to phase, amplitude and decoherence maps.

mod filter;
mod retrieve;
mod split;
pub mod stack_io;
mod synth;

pub use filter::{
    average_filtered, fourier_filter, locate_sideband, track_global_phase, AnalyticSignal, FilterWindow, FringeAnalyzer,
    PhaseTrack,
};
pub use retrieve::{
    decoherence_map, extract_phase, fit_gamma, fit_parabola_phase, phase_fidelity, row_profile, DecoherenceMap,
    ExtractOptions, GammaFit, ParabolaFit, ParabolaOptions, PhaseExtraction,
};
pub use split::{delta_phi_stats, split_readout_separate, split_windows, DeltaPhiStats, SplitAxis, SplitResult, SplitWindows};
pub use synth::{synth_interferogram, CameraFrame, CameraModel, DriftModel, Interferometer, ReferenceBeam, ReferenceEnvelope};
