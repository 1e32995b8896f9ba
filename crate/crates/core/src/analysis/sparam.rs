use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::PortRecord;

/// Time window applied to the port record before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Rectangular if the record has decayed 60 dB, tail taper otherwise.
    #[default]
    Auto,
    Rectangular,
    /// Raised-cosine taper over the last 10% of samples.
    TailTaper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParamOptions {
    pub reference_impedance_ohms: f64,
    pub window: Window,
    pub pad_factor: usize,
    /// Output is restricted to this band (normally the source's -20 dB band).
    pub band_hz: (f64, f64),
}

impl Default for SParamOptions {
    fn default() -> Self {
        SParamOptions { reference_impedance_ohms: 50.0, window: Window::Auto, pad_factor: 4, band_hz: (4e9, 16e9) }
    }
}

/// One-port reflection spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SParamResult {
    pub frequencies_hz: Vec<f64>,
    pub s11: Vec<Complex64>,
    pub reference_impedance_ohms: f64,
    /// False where the incident spectrum fell below the numerical floor.
    pub valid: Vec<bool>,
}

impl SParamResult {
    pub fn new(frequencies_hz: Vec<f64>, s11: Vec<Complex64>, reference_impedance_ohms: f64) -> Result<SParamResult> {
        if frequencies_hz.len() != s11.len() {
            return Err(Error::Analysis("frequency and S11 lengths differ".into()));
        }
        if frequencies_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Analysis("frequencies must be strictly increasing".into()));
        }
        let valid = vec![true; s11.len()];
        Ok(SParamResult { frequencies_hz, s11, reference_impedance_ohms, valid })
    }

    pub fn len(&self) -> usize {
        self.s11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s11.is_empty()
    }

    pub fn s11_db(&self) -> Vec<f64> {
        self.s11.iter().map(|s| 20.0 * s.norm().log10()).collect()
    }
}

/// Relative level of the incident spectrum below which a sample is masked.
const INCIDENT_FLOOR: f64 = 1e-6;

/// S11 from the port's voltage and current via incident and reflected
/// power waves `a = (V + Z0 I) / 2 sqrt(Z0)`, `b = (V - Z0 I) / 2 sqrt(Z0)`.
pub fn s11_from_port(record: &PortRecord, opts: &SParamOptions) -> Result<SParamResult> {
    let z0 = opts.reference_impedance_ohms;
    if !(z0 > 0.0) {
        return Err(Error::Analysis("reference impedance must be positive".into()));
    }
    if opts.pad_factor < 1 {
        return Err(Error::Analysis("pad factor must be at least 1".into()));
    }
    let (f_lo, f_hi) = opts.band_hz;
    if !(f_lo >= 0.0 && f_hi > f_lo) {
        return Err(Error::Analysis(format!("invalid analysis band {f_lo}..{f_hi} Hz")));
    }
    let dt = record.dt().ok_or_else(|| Error::Analysis("port record has fewer than two samples".into()))?;
    let n = record.len();
    let scale = 0.5 / z0.sqrt();
    let mut a: Vec<f64> = (0..n).map(|k| (record.v[k] + z0 * record.i[k]) * scale).collect();
    let mut b: Vec<f64> = (0..n).map(|k| (record.v[k] - z0 * record.i[k]) * scale).collect();

    let taper = match opts.window {
        Window::Rectangular => false,
        Window::TailTaper => true,
        Window::Auto => !has_decayed(record, z0, 60.0),
    };
    if taper {
        apply_tail_taper(&mut a);
        apply_tail_taper(&mut b);
    }

    let nfft = n.next_power_of_two() * opts.pad_factor;
    let spec_a = real_fft(&a, nfft);
    let spec_b = real_fft(&b, nfft);
    let df = 1.0 / (nfft as f64 * dt);
    let peak = spec_a.iter().take(nfft / 2 + 1).fold(0.0f64, |m, c| m.max(c.norm()));
    let k_lo = (f_lo / df).ceil() as usize;
    let k_hi = ((f_hi / df).floor() as usize).min(nfft / 2);
    let mut out = SParamResult { frequencies_hz: Vec::new(), s11: Vec::new(), reference_impedance_ohms: z0, valid: Vec::new() };
    for k in k_lo.max(1)..=k_hi {
        let (ak, bk) = (spec_a[k], spec_b[k]);
        let ok = ak.norm() > INCIDENT_FLOOR * peak;
        out.frequencies_hz.push(k as f64 * df);
        out.s11.push(if ok { bk / ak } else { Complex64::new(0.0, 0.0) });
        out.valid.push(ok);
    }
    if out.is_empty() {
        return Err(Error::Analysis("no transform bins fall inside the analysis band".into()));
    }
    if out.valid.iter().any(|v| !v) {
        log::warn!("{} S11 samples masked: incident spectrum below floor", out.valid.iter().filter(|v| !**v).count());
    }
    Ok(out)
}

/// True if the windowed port energy over the last 10% of the record is at
/// least `db` below its peak.
pub fn has_decayed(record: &PortRecord, z0: f64, db: f64) -> bool {
    let e: Vec<f64> = record.v.iter().zip(&record.i).map(|(v, i)| v * v + (z0 * i) * (z0 * i)).collect();
    let peak = e.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return true;
    }
    let tail = (e.len() / 10).max(1);
    let late = e[e.len() - tail..].iter().cloned().fold(0.0, f64::max);
    late <= peak * 10f64.powf(-db / 10.0)
}

fn apply_tail_taper(x: &mut [f64]) {
    let n = x.len();
    let m = (n / 10).max(1);
    for (q, v) in x[n - m..].iter_mut().enumerate() {
        let r = (q + 1) as f64 / m as f64;
        *v *= 0.5 * (1.0 + (std::f64::consts::PI * r).cos());
    }
}

fn real_fft(x: &[f64], nfft: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf
}

/// Continuous-time Fourier transform of uniformly sampled data at `f`,
/// `sum x_n exp(-j 2 pi f t_n) dt`.
pub fn dtft(x: &[f64], t0: f64, dt: f64, f: f64) -> Complex64 {
    let w = -2.0 * std::f64::consts::PI * f;
    let step = Complex64::from_polar(1.0, w * dt);
    let mut ph = Complex64::from_polar(dt, w * t0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        if n % 1024 == 0 {
            // re-anchor the recurrence to bound phase drift
            ph = Complex64::from_polar(dt, w * (t0 + n as f64 * dt));
        }
        acc += ph * v;
        ph *= step;
    }
    acc
}

/// Time-averaged power `Re(V I*) / 2` accepted by the port at `f`, in the
/// transform units used for Huygens-box fields.
pub fn accepted_power(record: &PortRecord, f: f64) -> Result<f64> {
    let dt = record.dt().ok_or_else(|| Error::Analysis("port record has fewer than two samples".into()))?;
    let t0 = record.time_s[0];
    let v = dtft(&record.v, t0, dt, f);
    let i = dtft(&record.i, t0, dt, f);
    Ok(0.5 * (v * i.conj()).re)
}

/// Fraction `1 - |S11|^2` of the incident power that the port accepts at `f`.
pub fn mismatch_factor(record: &PortRecord, f: f64, z0: f64) -> Result<f64> {
    let dt = record.dt().ok_or_else(|| Error::Analysis("port record has fewer than two samples".into()))?;
    let t0 = record.time_s[0];
    let v = dtft(&record.v, t0, dt, f);
    let i = dtft(&record.i, t0, dt, f);
    let a = v + i * z0;
    if a.norm() == 0.0 {
        return Err(Error::Analysis(format!("no incident power at {f} Hz")));
    }
    Ok(1.0 - ((v - i * z0) / a).norm_sqr())
}
