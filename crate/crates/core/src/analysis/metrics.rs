use serde::{Deserialize, Serialize};

use super::{find_bands, Band, FarFieldPattern, SParamResult};
use crate::error::{Error, Result};

/// Efficiencies up to this value are treated as numerical overshoot.
pub const EFFICIENCY_HEADROOM: f64 = 1.01;

/// `P_rad / P_in`, clamped to 1 within the numerical headroom.
pub fn radiation_efficiency(p_rad: f64, p_in: f64) -> Result<f64> {
    if !(p_in > 0.0) {
        return Err(Error::Analysis(format!("accepted power {p_in} W is not positive")));
    }
    let eta = p_rad / p_in;
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::Analysis(format!("invalid efficiency {eta}")));
    }
    if eta > EFFICIENCY_HEADROOM {
        return Err(Error::EnergyAccounting(eta));
    }
    Ok(eta.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub frequency_hz: f64,
    pub peak_gain_dbi: Option<f64>,
    pub peak_directivity_dbi: f64,
    pub efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEfficiency {
    pub band: Band,
    /// Mean efficiency over the pattern frequencies inside the band.
    pub efficiency: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaMetrics {
    pub min_s11_db: f64,
    pub min_s11_frequency_hz: f64,
    pub peak_gain_dbi: Option<f64>,
    pub peak_gain_frequency_hz: Option<f64>,
    pub gain_curve: Vec<GainPoint>,
    pub bands: Vec<Band>,
    pub band_efficiency: Vec<BandEfficiency>,
}

/// Collects the headline numbers of one run. Ties go to the lower frequency.
pub fn summarize(s: &SParamResult, patterns: &[FarFieldPattern], threshold_db: f64) -> AntennaMetrics {
    let db = s.s11_db();
    let mut min_k = None;
    for k in 0..db.len() {
        if s.valid[k] && min_k.is_none_or(|m: usize| db[k] < db[m]) {
            min_k = Some(k);
        }
    }
    let (min_s11_db, min_s11_frequency_hz) = match min_k {
        Some(k) => (db[k], s.frequencies_hz[k]),
        None => (f64::NAN, f64::NAN),
    };

    let mut sorted: Vec<&FarFieldPattern> = patterns.iter().collect();
    sorted.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    let gain_curve: Vec<GainPoint> = sorted
        .iter()
        .map(|p| GainPoint {
            frequency_hz: p.frequency_hz,
            peak_gain_dbi: p.peak_gain().map(|g| g.0),
            peak_directivity_dbi: p.peak_directivity().0,
            efficiency: p.efficiency,
        })
        .collect();
    let mut best: Option<&GainPoint> = None;
    for g in &gain_curve {
        if let Some(v) = g.peak_gain_dbi {
            if best.is_none_or(|b| v > b.peak_gain_dbi.unwrap()) {
                best = Some(g);
            }
        }
    }

    let bands = find_bands(s, threshold_db);
    let band_efficiency = bands
        .iter()
        .map(|b| {
            let inside: Vec<f64> = gain_curve.iter().filter(|g| b.contains(g.frequency_hz)).filter_map(|g| g.efficiency).collect();
            BandEfficiency {
                band: *b,
                efficiency: if inside.is_empty() { None } else { Some(inside.iter().sum::<f64>() / inside.len() as f64) },
                samples: inside.len(),
            }
        })
        .collect();

    AntennaMetrics {
        min_s11_db,
        min_s11_frequency_hz,
        peak_gain_dbi: best.and_then(|g| g.peak_gain_dbi),
        peak_gain_frequency_hz: best.map(|g| g.frequency_hz),
        gain_curve,
        bands,
        band_efficiency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn pattern(f: f64, gain_db: f64) -> FarFieldPattern {
        FarFieldPattern {
            frequency_hz: f,
            theta_deg: vec![0.0, 90.0],
            phi_deg: vec![0.0],
            e_theta: vec![Complex64::new(0.0, 0.0); 2],
            e_phi: vec![Complex64::new(0.0, 0.0); 2],
            directivity_dbi: vec![gain_db + 1.0, 0.0],
            gain_dbi: Some(vec![gain_db, -1.0]),
            radiated_power_w: 1.0,
            accepted_power_w: Some(1.25),
            efficiency: Some(0.8),
        }
    }

    fn spectrum() -> SParamResult {
        let f = vec![5e9, 6e9, 7e9, 8e9];
        let s = [-3.0, -15.0, -25.0, -4.0].iter().map(|d: &f64| Complex64::new(10f64.powf(d / 20.0), 0.0)).collect();
        SParamResult::new(f, s, 50.0).unwrap()
    }

    #[test]
    fn efficiency_clamps_and_rejects() {
        assert_eq!(radiation_efficiency(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(radiation_efficiency(1.005, 1.0).unwrap(), 1.0);
        assert!((radiation_efficiency(0.92, 1.0).unwrap() - 0.92).abs() < 1e-15);
        assert!(matches!(radiation_efficiency(1.02, 1.0), Err(Error::EnergyAccounting(_))));
        assert!(radiation_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn single_frequency_is_both_extrema() {
        let s = SParamResult::new(vec![7e9], vec![Complex64::new(0.1, 0.0)], 50.0).unwrap();
        let m = summarize(&s, &[pattern(7e9, 5.0)], -10.0);
        assert_eq!(m.min_s11_frequency_hz, 7e9);
        assert_eq!(m.peak_gain_frequency_hz, Some(7e9));
        assert_eq!(m.peak_gain_dbi, Some(5.0));
    }

    #[test]
    fn gain_ties_go_to_lower_frequency() {
        let ps = [pattern(9e9, 6.0), pattern(7e9, 6.0), pattern(8e9, 4.0), pattern(10e9, 5.0)];
        let m = summarize(&spectrum(), &ps, -10.0);
        assert_eq!(m.peak_gain_frequency_hz, Some(7e9));
        assert_eq!(m.gain_curve.len(), 4);
        assert!(m.gain_curve.windows(2).all(|w| w[0].frequency_hz < w[1].frequency_hz));
    }

    #[test]
    fn bands_carry_mean_efficiency() {
        let m = summarize(&spectrum(), &[pattern(6.5e9, 3.0), pattern(9e9, 3.0)], -10.0);
        assert_eq!(m.min_s11_db.round(), -25.0);
        assert_eq!(m.min_s11_frequency_hz, 7e9);
        assert_eq!(m.bands.len(), 1);
        assert_eq!(m.band_efficiency[0].samples, 1);
        assert_eq!(m.band_efficiency[0].efficiency, Some(0.8));
    }
}
