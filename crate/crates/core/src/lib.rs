//! Design, simulation and post-processing toolkit for slotted microstrip
//! patch arrays.
//!
//! The crate is organized along the natural workflow:
//!
//! * [`design`] closed-form transmission-line patch sizing,
//! * [`geometry`] parametric 2.5-D scenes and their rasterization onto a Yee grid,
//! * [`solver`] a 3-D FDTD engine with CPML boundaries and a resistive lumped port,
//! * [`analysis`] S11 extraction, band finding, near-to-far-field transform and metrics,
//! * [`oracles`] independent analytic models used as cross-checks,
//! * [`sweep`] a batch runner that varies one geometry parameter.
//!
//! Field updates run over z-slabs and use rayon when the `parallel` feature
//! is enabled (the default); the sequential path is always available and
//! produces bit-identical fields.

// NaN-rejecting `!(x > 0.0)` checks and full-precision reference constants are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod analysis;
pub mod design;
pub mod error;
pub mod geometry;
pub mod oracles;
pub mod par;
pub mod presets;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 2.997_924_58e8;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m), derived so that `EPS0 * MU0 * C0^2 == 1`.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Free-space wave impedance (ohms).
pub const ETA0: f64 = MU0 * C0;

/// Millimeters to meters.
#[inline]
pub fn mm(v: f64) -> f64 {
    v * 1e-3
}
