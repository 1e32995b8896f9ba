//! Closed-form transmission-line sizing of a rectangular microstrip patch.
//!
//! Public functions take frequencies in hertz and lengths in millimeters;
//! the arithmetic itself runs in meters with `C0` fixed at 299 792 458 m/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C0;

const MM_PER_M: f64 = 1e3;

/// Dielectric substrate of a single-layer microstrip board.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub relative_permittivity: f64,
    pub loss_tangent: f64,
    pub height_mm: f64,
}

impl SubstrateSpec {
    pub fn new(relative_permittivity: f64, loss_tangent: f64, height_mm: f64) -> Result<Self> {
        let s = SubstrateSpec {
            relative_permittivity,
            loss_tangent,
            height_mm,
        };
        s.validate()?;
        Ok(s)
    }

    /// Rogers RT/duroid 5880 at the 0.766 mm board thickness.
    pub fn rt5880() -> Self {
        SubstrateSpec {
            relative_permittivity: 2.2,
            loss_tangent: 0.00009,
            height_mm: 0.766,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_permittivity >= 1.0) {
            return Err(Error::domain(format!(
                "relative permittivity {} must be >= 1",
                self.relative_permittivity
            )));
        }
        if !(self.loss_tangent >= 0.0) {
            return Err(Error::domain(format!(
                "loss tangent {} must be >= 0",
                self.loss_tangent
            )));
        }
        if !(self.height_mm > 0.0) {
            return Err(Error::domain(format!(
                "substrate height {} mm must be > 0",
                self.height_mm
            )));
        }
        Ok(())
    }
}

/// Which fringing correction to apply when turning the half guided
/// wavelength into a physical patch length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthModel {
    /// `L = lambda0 / (2 sqrt(eps_e)) - dl`, a single extension subtracted.
    #[default]
    Single,
    /// Textbook form with one extension per radiating edge, `- 2 dl`.
    Double,
}

impl LengthModel {
    pub fn extension_count(self) -> f64 {
        match self {
            LengthModel::Single => 1.0,
            LengthModel::Double => 2.0,
        }
    }
}

/// Every intermediate of the sizing chain, in the units its name carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchDesign {
    pub resonant_frequency_hz: f64,
    pub patch_width_mm: f64,
    pub effective_permittivity: f64,
    pub length_extension_mm: f64,
    pub patch_length_mm: f64,
    pub substrate_length_mm: f64,
    pub substrate_width_mm: f64,
    pub wavelength_mm: f64,
    /// Substrate height the chain was evaluated with.
    pub height_mm: f64,
    pub relative_permittivity: f64,
}

fn check_frequency(f_r: f64) -> Result<()> {
    if f_r > 0.0 && f_r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("frequency {f_r} Hz must be positive")))
    }
}

fn check_permittivity(eps_r: f64) -> Result<()> {
    if eps_r >= 1.0 && eps_r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "relative permittivity {eps_r} must be >= 1"
        )))
    }
}

fn check_length(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} mm must be positive")))
    }
}

/// Free-space wavelength in millimeters.
pub fn free_space_wavelength_mm(f_r: f64) -> Result<f64> {
    check_frequency(f_r)?;
    Ok(C0 / f_r * MM_PER_M)
}

/// Patch width for efficient radiation: `W = c / (2 f_r) * sqrt(2 / (eps_r + 1))`.
pub fn compute_patch_width(f_r: f64, eps_r: f64) -> Result<f64> {
    check_frequency(f_r)?;
    check_permittivity(eps_r)?;
    let w_m = C0 / (2.0 * f_r) * (2.0 / (eps_r + 1.0)).sqrt();
    Ok(w_m * MM_PER_M)
}

/// Effective permittivity of a microstrip of width `w_mm` on height `h_mm`.
pub fn compute_effective_permittivity(eps_r: f64, h_mm: f64, w_mm: f64) -> Result<f64> {
    check_permittivity(eps_r)?;
    check_length("substrate height", h_mm)?;
    check_length("patch width", w_mm)?;
    let h = h_mm / MM_PER_M;
    let w = w_mm / MM_PER_M;
    Ok((eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * h / w).sqrt())
}

/// Fringing length extension `dl` (Hammerstad form).
pub fn compute_length_extension(eps_e: f64, h_mm: f64, w_mm: f64) -> Result<f64> {
    if !(eps_e > 0.258) {
        return Err(Error::Singularity(format!(
            "effective permittivity {eps_e} must exceed 0.258"
        )));
    }
    check_length("substrate height", h_mm)?;
    check_length("patch width", w_mm)?;
    let h = h_mm / MM_PER_M;
    let aspect = w_mm / h_mm;
    let dl = 0.412 * h * (eps_e + 0.3) / (eps_e - 0.258) * (aspect + 0.264) / (aspect + 0.8);
    Ok(dl * MM_PER_M)
}

/// Physical patch length with the default single-extension model.
pub fn compute_patch_length(f_r: f64, eps_e: f64, dl_mm: f64) -> Result<f64> {
    compute_patch_length_with(f_r, eps_e, dl_mm, LengthModel::Single)
}

pub fn compute_patch_length_with(
    f_r: f64,
    eps_e: f64,
    dl_mm: f64,
    model: LengthModel,
) -> Result<f64> {
    check_frequency(f_r)?;
    if !(eps_e >= 1.0) {
        return Err(Error::domain(format!(
            "effective permittivity {eps_e} must be >= 1"
        )));
    }
    if !(dl_mm >= 0.0) {
        return Err(Error::domain(format!("length extension {dl_mm} mm must be >= 0")));
    }
    let lambda0 = C0 / f_r;
    let l = lambda0 / (2.0 * eps_e.sqrt()) - model.extension_count() * dl_mm / MM_PER_M;
    if l <= 0.0 {
        return Err(Error::InfeasibleDesign(format!(
            "half guided wavelength {:.4} mm does not exceed the fringing correction",
            lambda0 / (2.0 * eps_e.sqrt()) * MM_PER_M
        )));
    }
    Ok(l * MM_PER_M)
}

/// Substrate footprint `(L + 6h, W + 6h)`.
pub fn compute_substrate_dims(l_mm: f64, w_mm: f64, h_mm: f64) -> Result<(f64, f64)> {
    check_length("patch length", l_mm)?;
    check_length("patch width", w_mm)?;
    check_length("substrate height", h_mm)?;
    Ok((l_mm + 6.0 * h_mm, w_mm + 6.0 * h_mm))
}

/// Rule-of-thumb substrate height `0.0606 lambda0 / sqrt(eps_r)`.
pub fn compute_substrate_height(f_r: f64, eps_r: f64) -> Result<f64> {
    check_frequency(f_r)?;
    check_permittivity(eps_r)?;
    let lambda0 = C0 / f_r;
    Ok(0.0606 * lambda0 / eps_r.sqrt() * MM_PER_M)
}

/// Runs the full sizing chain: width, effective permittivity, extension,
/// length, then substrate footprint. Without `h_override_mm` the height comes
/// from [`compute_substrate_height`].
pub fn design_patch(
    f_r: f64,
    substrate: &SubstrateSpec,
    h_override_mm: Option<f64>,
) -> Result<PatchDesign> {
    design_patch_with(f_r, substrate, h_override_mm, LengthModel::Single)
}

pub fn design_patch_with(
    f_r: f64,
    substrate: &SubstrateSpec,
    h_override_mm: Option<f64>,
    model: LengthModel,
) -> Result<PatchDesign> {
    let eps_r = substrate.relative_permittivity;
    check_frequency(f_r)?;
    check_permittivity(eps_r)?;
    let h = match h_override_mm {
        Some(h) => {
            check_length("substrate height", h)?;
            h
        }
        None => compute_substrate_height(f_r, eps_r)?,
    };
    let w = compute_patch_width(f_r, eps_r)?;
    let eps_e = compute_effective_permittivity(eps_r, h, w)?;
    let dl = compute_length_extension(eps_e, h, w)?;
    let l = compute_patch_length_with(f_r, eps_e, dl, model)?;
    let (ls, ws) = compute_substrate_dims(l, w, h)?;
    Ok(PatchDesign {
        resonant_frequency_hz: f_r,
        patch_width_mm: w,
        effective_permittivity: eps_e,
        length_extension_mm: dl,
        patch_length_mm: l,
        substrate_length_mm: ls,
        substrate_width_mm: ws,
        wavelength_mm: free_space_wavelength_mm(f_r)?,
        height_mm: h,
        relative_permittivity: eps_r,
    })
}
