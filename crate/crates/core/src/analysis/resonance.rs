use num_complex::Complex64;

use crate::error::{Error, Result};

fn hann_dtft(x: &[f64], dt: f64, f: f64) -> f64 {
    let n = x.len();
    let w = -2.0 * std::f64::consts::PI * f * dt;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &v) in x.iter().enumerate() {
        let win = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
        acc += Complex64::from_polar(win * v, w * k as f64);
    }
    acc.norm()
}

/// Frequency of the strongest spectral peak of `x` in `[f_lo, f_hi]`.
///
/// Intended for free ringing after the source has ended: a Hann window
/// suppresses leakage, a scan at a quarter bin locates the peak and a
/// golden-section search refines it.
pub fn find_resonance(x: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> Result<f64> {
    if x.len() < 16 {
        return Err(Error::Analysis("too few samples for a resonance estimate".into()));
    }
    if !(f_lo > 0.0 && f_hi > f_lo && dt > 0.0) {
        return Err(Error::Analysis("invalid resonance search band".into()));
    }
    let bin = 1.0 / (x.len() as f64 * dt);
    let step = bin / 4.0;
    let count = ((f_hi - f_lo) / step).ceil() as usize + 1;
    let mut best = (f_lo, -1.0);
    for q in 0..count {
        let f = (f_lo + q as f64 * step).min(f_hi);
        let m = hann_dtft(x, dt, f);
        if m > best.1 {
            best = (f, m);
        }
    }
    if !(best.1 > 0.0) {
        return Err(Error::Analysis("signal has no energy in the search band".into()));
    }
    let (mut a, mut b) = ((best.0 - step).max(f_lo), (best.0 + step).min(f_hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (hann_dtft(x, dt, c), hann_dtft(x, dt, d));
    while b - a > 1e-7 * bin {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = hann_dtft(x, dt, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = hann_dtft(x, dt, d);
        }
    }
    Ok(0.5 * (a + b))
}
