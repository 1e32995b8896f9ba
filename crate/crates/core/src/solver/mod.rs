//! Yee-grid FDTD engine.
//!
//! Fields live on a common padded lattice of `(nx+1)(ny+1)(nz+1)` points per
//! component (x fastest), of which each component uses its own staggered
//! extent. The outer walls are PEC; open problems put a CPML inside them.
//! Losses enter through per-edge conductivity, excitation through a
//! resistive Thevenin port spanning one or more edges.

mod cpml;
mod engine;
mod huygens;
mod output;

use serde::{Deserialize, Serialize};

pub use engine::{FieldComponent, Fields, Simulation};
pub use huygens::{HuygensData, HuygensFace};
pub use output::{PortRecord, ProbeRecord, RunMetadata, RunOutput};

use crate::error::{Error, Result};
use crate::geometry::{voxelize, MaterialGrid, PortSpan, Scene, VoxelOptions};
use crate::par::Parallelism;
use crate::C0;

/// Cell counts, spacings and stability settings of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub pml_cells: usize,
    pub courant_factor: f64,
}

impl GridSpec {
    pub fn from_grid(g: &MaterialGrid, pml_cells: usize, courant_factor: f64) -> GridSpec {
        GridSpec { nx: g.nx, ny: g.ny, nz: g.nz, dx: g.dx, dy: g.dy, dz: g.dz, pml_cells, courant_factor }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::Config("grid needs at least one cell per axis".into()));
        }
        if [self.dx, self.dy, self.dz].iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::Config("cell sizes must be positive".into()));
        }
        if !(self.courant_factor > 0.0 && self.courant_factor < 1.0) {
            return Err(Error::Config(format!("Courant factor {} outside (0, 1)", self.courant_factor)));
        }
        Ok(())
    }
}

/// `S / (c sqrt(1/dx^2 + 1/dy^2 + 1/dz^2))`.
pub fn compute_timestep(g: &GridSpec) -> f64 {
    let s = (g.dx.powi(-2) + g.dy.powi(-2) + g.dz.powi(-2)).sqrt();
    g.courant_factor / (C0 * s)
}

/// Gaussian-modulated sine `A exp(-((t - t0)/tau)^2) sin(2 pi fc (t - t0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub center_frequency_hz: f64,
    pub tau_s: f64,
    pub delay_s: f64,
    pub amplitude_v: f64,
}

impl SourceSpec {
    /// Pulse whose spectrum falls 20 dB below its peak at `f_lo` and `f_hi`.
    pub fn for_band(f_lo: f64, f_hi: f64, amplitude_v: f64) -> Result<SourceSpec> {
        if !(f_lo > 0.0 && f_hi > f_lo) {
            return Err(Error::Config(format!("invalid source band {f_lo}..{f_hi} Hz")));
        }
        let tau = std::f64::consts::LN_10.sqrt() / (std::f64::consts::PI * (f_hi - f_lo) / 2.0);
        Ok(SourceSpec {
            center_frequency_hz: (f_lo + f_hi) / 2.0,
            tau_s: tau,
            delay_s: 4.0 * tau,
            amplitude_v,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = t - self.delay_s;
        self.amplitude_v * (-(s / self.tau_s).powi(2)).exp() * (2.0 * std::f64::consts::PI * self.center_frequency_hz * s).sin()
    }

    /// Frequencies where the spectrum is `db` below its peak.
    pub fn band_edges(&self, db: f64) -> (f64, f64) {
        let half = (db.abs() / 20.0 * std::f64::consts::LN_10).sqrt() / (std::f64::consts::PI * self.tau_s);
        ((self.center_frequency_hz - half).max(0.0), self.center_frequency_hz + half)
    }

    /// Time after which the envelope is below `exp(-16)` of its peak.
    pub fn end_time(&self) -> f64 {
        self.delay_s + 4.0 * self.tau_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency_hz > 0.0 && self.tau_s > 0.0) || !self.amplitude_v.is_finite() {
            return Err(Error::Config("source needs positive frequency and width".into()));
        }
        if self.delay_s < 4.0 * self.tau_s * (1.0 - 1e-12) {
            return Err(Error::Config("source delay must be at least 4 tau".into()));
        }
        Ok(())
    }
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::for_band(4e9, 16e9, 1.0).expect("valid default band")
    }
}

/// Convolutional PML settings (polynomial grading of order `grading_order`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpmlParams {
    pub cells: usize,
    pub grading_order: f64,
    /// Multiplier on the optimal `(m+1)/(150 pi dx)` conductivity.
    pub sigma_factor: f64,
    pub kappa_max: f64,
    /// Largest complex-frequency shift, reached at the inner interface.
    pub alpha_max: f64,
}

impl Default for CpmlParams {
    fn default() -> Self {
        CpmlParams { cells: 10, grading_order: 3.0, sigma_factor: 1.0, kappa_max: 5.0, alpha_max: 0.05 }
    }
}

impl CpmlParams {
    pub fn none() -> Self {
        CpmlParams { cells: 0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepControl {
    Fixed { steps: usize },
    /// Stops once the windowed port energy is `decay_db` below its peak
    /// (after the source has finished), or at `max_steps`.
    Auto { max_steps: usize, decay_db: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Auto { max_steps: 60_000, decay_db: 60.0 }
    }
}

/// Closed surface for the near-to-far-field transform, `gap_cells` inside
/// the absorbing layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuygensSpec {
    pub gap_cells: usize,
    pub frequencies_hz: Vec<f64>,
}

/// Records one field component at one lattice index every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub component: FieldComponent,
    pub index: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub courant_factor: f64,
    pub cpml: CpmlParams,
    pub source: SourceSpec,
    pub steps: StepControl,
    #[serde(default)]
    pub huygens: Option<HuygensSpec>,
    #[serde(default)]
    pub probes: Vec<Probe>,
    /// Source-free resistive edges (test fixtures).
    #[serde(default)]
    pub lumped_loads: Vec<PortSpan>,
    #[serde(default)]
    pub parallelism: Parallelism,
    /// Reference impedance for the stop criterion's port energy.
    pub reference_impedance_ohms: f64,
    /// Cadence, in steps, of energy evaluation, divergence checks and progress callbacks.
    pub check_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            courant_factor: 0.98,
            cpml: CpmlParams::default(),
            source: SourceSpec::default(),
            steps: StepControl::default(),
            huygens: None,
            probes: Vec::new(),
            lumped_loads: Vec::new(),
            parallelism: Parallelism::default(),
            reference_impedance_ohms: 50.0,
            check_every: 100,
        }
    }
}

/// Snapshot passed to progress observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub step: usize,
    pub time_s: f64,
    pub energy_j: f64,
}

/// Voxelizes `scene` and runs it to completion.
pub fn run_simulation(scene: &Scene, voxel: &VoxelOptions, config: &SolverConfig) -> Result<RunOutput> {
    run_simulation_with(scene, voxel, config, &mut |_| {})
}

pub fn run_simulation_with(
    scene: &Scene,
    voxel: &VoxelOptions,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&Progress),
) -> Result<RunOutput> {
    let opts = VoxelOptions { boundary_cells: config.cpml.cells, ..*voxel };
    let grid = voxelize(scene, &opts)?;
    run_grid_with(&grid, config, observer)
}

pub fn run_grid(grid: &MaterialGrid, config: &SolverConfig) -> Result<RunOutput> {
    run_grid_with(grid, config, &mut |_| {})
}

pub fn run_grid_with(grid: &MaterialGrid, config: &SolverConfig, observer: &mut dyn FnMut(&Progress)) -> Result<RunOutput> {
    let mut sim = Simulation::new(grid, config)?;
    sim.run(observer)?;
    Ok(sim.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(d: [f64; 3]) -> GridSpec {
        GridSpec { nx: 1, ny: 1, nz: 1, dx: d[0], dy: d[1], dz: d[2], pml_cells: 0, courant_factor: 0.98 }
    }

    #[test]
    fn timestep_examples() {
        assert_relative_eq!(compute_timestep(&spec([0.2e-3; 3])), 3.774_633_075_03e-13, max_relative = 1e-9);
        assert_relative_eq!(compute_timestep(&spec([0.1e-3, 0.2e-3, 0.4e-3])), 2.853_354_402_01e-13, max_relative = 1e-9);
        let d = 0.37e-3;
        assert_relative_eq!(compute_timestep(&spec([d; 3])), 0.98 * d / (C0 * 3f64.sqrt()), max_relative = 1e-14);
        let mut bad = spec([1e-3; 3]);
        bad.courant_factor = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_source_band_edges() {
        let s = SourceSpec::default();
        assert!(s.validate().is_ok());
        let (lo, hi) = s.band_edges(20.0);
        assert_relative_eq!(lo, 4e9, max_relative = 1e-12);
        assert_relative_eq!(hi, 16e9, max_relative = 1e-12);
        assert_relative_eq!(s.tau_s, 8.050_8e-11, max_relative = 1e-4);
        // the pulse starts from (numerically) zero
        assert!(s.value(0.0).abs() < 1.2e-7);
        let late = SourceSpec { delay_s: s.tau_s, ..s };
        assert!(late.validate().is_err());
    }
}
