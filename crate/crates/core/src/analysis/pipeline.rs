//! The standard post-processing of one run, shared by the CLI and sweeps.

use std::path::Path;

use super::report::{pattern_file_name, write_bands_json, write_metrics_json, write_pattern_csv, write_s11_csv, write_touchstone};
use super::{accepted_power, find_bands, mismatch_factor, ntff_transform, s11_from_port, summarize, AngularGrid, AntennaMetrics, Band, FarFieldPattern, SParamOptions, SParamResult};
use crate::error::Result;
use crate::par::Parallelism;
use crate::solver::RunOutput;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub threshold_db: f64,
    /// Defaults to the source's -20 dB band.
    pub band_hz: Option<(f64, f64)>,
    pub reference_impedance_ohms: f64,
    pub angular: AngularGrid,
    /// Gain is left out where the port accepts less than this fraction of
    /// the incident power; the accepted power is too ill-conditioned there.
    pub min_mismatch_factor: f64,
    pub parallelism: Parallelism,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            threshold_db: -10.0,
            band_hz: None,
            reference_impedance_ohms: 50.0,
            angular: AngularGrid::default(),
            min_mismatch_factor: 0.05,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunAnalysis {
    pub s11: SParamResult,
    pub bands: Vec<Band>,
    pub patterns: Vec<FarFieldPattern>,
    pub metrics: AntennaMetrics,
    pub warnings: Vec<String>,
}

/// Reflection spectrum, bands, one pattern per recorded far-field frequency
/// and the summary metrics of `run`.
pub fn analyze_run(run: &RunOutput, opts: &AnalyzeOptions) -> Result<RunAnalysis> {
    let band_hz = opts.band_hz.unwrap_or_else(|| run.config.source.band_edges(20.0));
    let sp = SParamOptions { reference_impedance_ohms: opts.reference_impedance_ohms, band_hz, ..Default::default() };
    let s11 = s11_from_port(&run.port, &sp)?;
    let bands = find_bands(&s11, opts.threshold_db);
    let mut patterns = Vec::new();
    let mut skipped = Vec::new();
    if let Some(h) = &run.huygens {
        for &f in &h.frequencies_hz {
            let p_in = accepted_power(&run.port, f)?;
            let m = mismatch_factor(&run.port, f, opts.reference_impedance_ohms)?;
            let p_in = if p_in > 0.0 && m >= opts.min_mismatch_factor {
                Some(p_in)
            } else {
                skipped.push(f);
                None
            };
            patterns.push(ntff_transform(h, f, &opts.angular, p_in, opts.parallelism)?);
        }
    }
    let mut warnings = Vec::new();
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|f| format!("{:.2}", f / 1e9)).collect();
        warnings.push(format!(
            "no gain at {} GHz: port accepts under {:.0}% of the incident power",
            list.join(", "),
            100.0 * opts.min_mismatch_factor
        ));
    }
    let metrics = summarize(&s11, &patterns, opts.threshold_db);
    Ok(RunAnalysis { s11, bands, patterns, metrics, warnings })
}

impl RunAnalysis {
    /// Writes `s11.s1p`, `s11.csv`, `bands.json`, `metrics.json` and one
    /// `pattern_<f>.csv` per pattern.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_touchstone(&self.s11, &dir.join("s11.s1p"))?;
        write_s11_csv(&self.s11, &dir.join("s11.csv"))?;
        write_bands_json(&self.bands, &dir.join("bands.json"))?;
        write_metrics_json(&self.metrics, &dir.join("metrics.json"))?;
        for p in &self.patterns {
            write_pattern_csv(p, &pattern_file_name(dir, p.frequency_hz))?;
        }
        Ok(())
    }

    /// Sum of the band widths.
    pub fn total_bandwidth_hz(&self) -> f64 {
        self.bands.iter().map(Band::width_hz).sum()
    }
}
