//! Output files and the comparison table against published figures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AntennaMetrics, Band, FarFieldPattern, SParamResult};
use crate::error::Result;

/// Touchstone v1 one-port file, real/imaginary format, frequencies in GHz.
pub fn write_touchstone(s: &SParamResult, path: &Path) -> Result<()> {
    let mut out = String::from("! patchfield one-port reflection\n");
    let _ = writeln!(out, "# GHz S RI R {}", s.reference_impedance_ohms);
    for k in (0..s.len()).filter(|&k| s.valid[k]) {
        let _ = writeln!(out, "{} {} {}", s.frequencies_hz[k] / 1e9, s.s11[k].re, s.s11[k].im);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_s11_csv(s: &SParamResult, path: &Path) -> Result<()> {
    let mut out = String::from("freq_hz,s11_db,s11_re,s11_im\n");
    let db = s.s11_db();
    for k in (0..s.len()).filter(|&k| s.valid[k]) {
        let _ = writeln!(out, "{},{},{},{}", s.frequencies_hz[k], db[k], s.s11[k].re, s.s11[k].im);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_bands_json(bands: &[Band], path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(bands)? + "\n")?;
    Ok(())
}

pub fn write_metrics_json(m: &AntennaMetrics, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(m)? + "\n")?;
    Ok(())
}

/// `pattern_<f>.csv` with the frequency in GHz, e.g. `pattern_8.43.csv`.
pub fn pattern_file_name(dir: &Path, f_hz: f64) -> PathBuf {
    let mut s = format!("{:.3}", f_hz / 1e9);
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    dir.join(format!("pattern_{s}.csv"))
}

pub fn write_pattern_csv(p: &FarFieldPattern, path: &Path) -> Result<()> {
    let mut out = String::from("theta_deg,phi_deg,directivity_dbi,gain_dbi\n");
    for (it, th) in p.theta_deg.iter().enumerate() {
        for (ip, ph) in p.phi_deg.iter().enumerate() {
            let k = p.index(it, ip);
            let _ = write!(out, "{th},{ph},{}", p.directivity_dbi[k]);
            match &p.gain_dbi {
                Some(g) => {
                    let _ = writeln!(out, ",{}", g[k]);
                }
                None => out.push_str(",\n"),
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Band edges rounded to 10 MHz, as in human-readable tables.
pub fn format_band(b: &Band) -> String {
    let r = |f: f64| (f / 1e7).round() / 100.0;
    format!("{:.2}-{:.2} GHz", r(b.f_low_hz), r(b.f_high_hz))
}

/// Published figures for the 3x3 double-T array.
pub mod paper {
    pub const BANDS_GHZ: [(f64, f64); 4] = [(6.62, 7.54), (8.27, 8.78), (10.98, 11.78), (13.65, 15.4)];
    pub const PEAK_GAIN_DBI: f64 = 7.99;
    pub const PEAK_GAIN_GHZ: f64 = 15.35;
    pub const MIN_S11_DB: f64 = -31.01;
    pub const MIN_S11_GHZ: f64 = 8.43;
    pub const BAND_EFFICIENCY: f64 = 0.92;
    /// Band whose efficiency is quoted.
    pub const EFFICIENCY_BAND_GHZ: (f64, f64) = (8.27, 8.78);
}

fn deviation(found: f64, target: f64) -> String {
    if !found.is_finite() {
        return "n/a".into();
    }
    format!("{:+.1}%", 100.0 * (found - target) / target.abs())
}

/// Markdown comparison of a run's metrics against the published values.
/// Deviations are reported, not judged.
pub fn paper_report(m: &AntennaMetrics) -> String {
    let mut s = String::from("# Comparison with published results\n\n");
    let _ = writeln!(s, "Bands found (S11 <= -10 dB): {}\n", m.bands.len());
    s.push_str("| published band (GHz) | published center | nearest found band | found center | center deviation |\n");
    s.push_str("|---|---|---|---|---|\n");
    for (lo, hi) in paper::BANDS_GHZ {
        let center = 0.5 * (lo + hi);
        let nearest = m.bands.iter().min_by(|a, b| {
            (a.center_hz() / 1e9 - center).abs().total_cmp(&(b.center_hz() / 1e9 - center).abs())
        });
        match nearest {
            Some(b) => {
                let _ = writeln!(
                    s,
                    "| {lo:.2}-{hi:.2} | {center:.2} | {} | {:.2} | {} |",
                    format_band(b),
                    b.center_hz() / 1e9,
                    deviation(b.center_hz() / 1e9, center)
                );
            }
            None => {
                let _ = writeln!(s, "| {lo:.2}-{hi:.2} | {center:.2} | none | - | n/a |");
            }
        }
    }
    s.push_str("\n| quantity | published | found | deviation |\n|---|---|---|---|\n");
    let gain = m.peak_gain_dbi.unwrap_or(f64::NAN);
    let gain_f = m.peak_gain_frequency_hz.unwrap_or(f64::NAN) / 1e9;
    let _ = writeln!(s, "| peak gain (dBi) | {:.2} | {:.2} | {} |", paper::PEAK_GAIN_DBI, gain, deviation(gain, paper::PEAK_GAIN_DBI));
    let _ = writeln!(s, "| peak gain frequency (GHz) | {:.2} | {:.2} | {} |", paper::PEAK_GAIN_GHZ, gain_f, deviation(gain_f, paper::PEAK_GAIN_GHZ));
    let _ = writeln!(s, "| min S11 (dB) | {:.2} | {:.2} | {} |", paper::MIN_S11_DB, m.min_s11_db, deviation(m.min_s11_db, paper::MIN_S11_DB));
    let f_min = m.min_s11_frequency_hz / 1e9;
    let _ = writeln!(s, "| min S11 frequency (GHz) | {:.2} | {:.2} | {} |", paper::MIN_S11_GHZ, f_min, deviation(f_min, paper::MIN_S11_GHZ));
    let (elo, ehi) = paper::EFFICIENCY_BAND_GHZ;
    let eff = m
        .band_efficiency
        .iter()
        .filter(|b| b.band.f_low_hz / 1e9 < ehi && b.band.f_high_hz / 1e9 > elo)
        .find_map(|b| b.efficiency)
        .unwrap_or(f64::NAN);
    let _ = writeln!(
        s,
        "| efficiency, {elo:.2}-{ehi:.2} GHz band | {:.2} | {:.2} | {} |",
        paper::BAND_EFFICIENCY,
        eff,
        deviation(eff, paper::BAND_EFFICIENCY)
    );
    s
}
