//! Post-processing of run output: reflection spectra, operating bands,
//! far-field patterns and summary metrics.

mod bands;
mod farfield;
mod metrics;
mod pipeline;
pub mod report;
mod resonance;
mod sparam;

pub use bands::{find_bands, Band};
pub use farfield::{box_radiated_power, ntff_transform, sphere_integral, AngularGrid, FarFieldPattern};
pub use metrics::{radiation_efficiency, summarize, AntennaMetrics, BandEfficiency, GainPoint, EFFICIENCY_HEADROOM};
pub use pipeline::{analyze_run, AnalyzeOptions, RunAnalysis};
pub use resonance::find_resonance;
pub use sparam::{accepted_power, dtft, has_decayed, mismatch_factor, s11_from_port, SParamOptions, SParamResult, Window};
