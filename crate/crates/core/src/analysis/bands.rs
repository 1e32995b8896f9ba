use serde::{Deserialize, Serialize};

use super::SParamResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
    pub threshold_db: f64,
}

impl Band {
    pub fn center_hz(&self) -> f64 {
        0.5 * (self.f_low_hz + self.f_high_hz)
    }

    pub fn width_hz(&self) -> f64 {
        self.f_high_hz - self.f_low_hz
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_low_hz && f <= self.f_high_hz
    }
}

/// Maximal intervals where S11 (dB) is at or below `threshold_db`.
///
/// Edges are interpolated linearly between the straddling samples; a band
/// that reaches the end of the spectrum is closed at the last sample.
/// Masked samples count as above threshold.
pub fn find_bands(s: &SParamResult, threshold_db: f64) -> Vec<Band> {
    let db = s.s11_db();
    let f = &s.frequencies_hz;
    let below: Vec<bool> = db.iter().zip(&s.valid).map(|(&d, &ok)| ok && d <= threshold_db).collect();
    let crossing = |a: usize, b: usize| {
        let (da, db_) = (db[a], db[b]);
        if !s.valid[a] || !s.valid[b] || da == db_ {
            return 0.5 * (f[a] + f[b]);
        }
        f[a] + (threshold_db - da) / (db_ - da) * (f[b] - f[a])
    };
    let mut bands = Vec::new();
    let mut k = 0;
    while k < below.len() {
        if !below[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < below.len() && below[k + 1] {
            k += 1;
        }
        let lo = if start == 0 { f[0] } else { crossing(start - 1, start) };
        let hi = if k + 1 == below.len() { f[k] } else { crossing(k, k + 1) };
        if hi > lo {
            bands.push(Band { f_low_hz: lo, f_high_hz: hi, threshold_db });
        }
        k += 1;
    }
    bands
}
