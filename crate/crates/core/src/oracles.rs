//! Analytic reference models. Nothing here touches the solver; these are the
//! numbers simulated results get compared against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C0;

/// Interior of a closed PEC box and the mode to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub a_mm: f64,
    pub b_mm: f64,
    pub d_mm: f64,
    pub m: u32,
    pub n: u32,
    pub p: u32,
}

impl CavitySpec {
    pub fn te101(a_mm: f64, b_mm: f64, d_mm: f64) -> Self {
        CavitySpec { a_mm, b_mm, d_mm, m: 1, n: 0, p: 1 }
    }
}

/// Eigenfrequency `(c/2) sqrt((m/a)^2 + (n/b)^2 + (p/d)^2)` in hertz.
pub fn cavity_resonance(c: &CavitySpec) -> Result<f64> {
    if !(c.a_mm > 0.0 && c.b_mm > 0.0 && c.d_mm > 0.0) {
        return Err(Error::domain("cavity dimensions must be positive"));
    }
    let zeros = [c.m, c.n, c.p].iter().filter(|&&v| v == 0).count();
    if zeros >= 2 {
        return Err(Error::domain(format!(
            "mode ({}, {}, {}) has more than one zero index",
            c.m, c.n, c.p
        )));
    }
    let term = |idx: u32, len_mm: f64| (idx as f64 / (len_mm * 1e-3)).powi(2);
    Ok(C0 / 2.0 * (term(c.m, c.a_mm) + term(c.n, c.b_mm) + term(c.p, c.d_mm)).sqrt())
}

/// Patch resonance predicted from a physical length, in both fringing forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchResonance {
    /// Inverse of the single-extension length formula used by the design chain.
    pub single_extension_hz: f64,
    /// Textbook form, one extension per radiating edge.
    pub double_extension_hz: f64,
}

pub fn tline_patch_resonance(l_mm: f64, dl_mm: f64, eps_e: f64) -> Result<PatchResonance> {
    if !(l_mm > 0.0 && dl_mm >= 0.0 && eps_e > 0.0) {
        return Err(Error::domain("patch length, extension and permittivity must be positive"));
    }
    let f = |ext: f64| C0 / (2.0 * (l_mm + ext * dl_mm) * 1e-3 * eps_e.sqrt());
    Ok(PatchResonance {
        single_extension_hz: f(1.0),
        double_extension_hz: f(2.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipoleKind {
    Hertzian,
    Halfwave,
}

/// Peak directivity (linear) of an ideal thin dipole.
///
/// The half-wave value is the numerical integral of its normalized pattern,
/// `2 / int_0^pi cos^2(pi/2 cos t) / sin t dt`.
pub fn dipole_directivity(kind: DipoleKind) -> f64 {
    match kind {
        DipoleKind::Hertzian => 1.5,
        DipoleKind::Halfwave => 2.0 / simpson(halfwave_integrand, 0.0, std::f64::consts::PI, 20_000),
    }
}

/// Normalized radiation intensity `U(theta)/U_max` of an ideal dipole.
pub fn dipole_pattern(kind: DipoleKind, theta: f64) -> f64 {
    match kind {
        DipoleKind::Hertzian => theta.sin().powi(2),
        DipoleKind::Halfwave => {
            let s = theta.sin();
            if s.abs() < 1e-12 {
                0.0
            } else {
                let c = (std::f64::consts::FRAC_PI_2 * theta.cos()).cos();
                (c / s).powi(2)
            }
        }
    }
}

fn halfwave_integrand(t: f64) -> f64 {
    let s = t.sin();
    if s.abs() < 1e-12 {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * t.cos()).cos().powi(2) / s
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn to_db10(linear: f64) -> f64 {
    10.0 * linear.log10()
}
