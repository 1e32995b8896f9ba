//! Named geometries and solver fixtures.
//!
//! Antenna presets are scenes built from [`PaperParams`]; validation
//! fixtures (cavity, lumped loads, dipoles) come with the grid and solver
//! settings they are meant to be run with.

use serde::{Deserialize, Serialize};

use crate::design::{design_patch, SubstrateSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    add_feed, add_ground_with_rear_slot, apply_double_t_slots, build_patch_element, tile_array, voxelize, ArrayParams,
    Axis, FeedParams, Layer, MaterialGrid, PortPlacement, PortSpan, Primitive, Scene, Shape, TSlotParams, VoxelOptions,
};
use crate::solver::{CpmlParams, HuygensSpec, SolverConfig, SourceSpec, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Plain rectangular patch sized for 6 GHz.
    SinglePatch,
    /// One slotted element with its feed and rear aperture.
    DoubleT,
    /// The 3x3 slotted array.
    #[serde(rename = "paper-3x3")]
    Paper3x3,
    /// 20 x 10 x 25 mm PEC cavity driven at its center.
    CavityTe101,
    /// One-cell current element in free space.
    DipoleHertzian,
    /// Center-fed dipole half a wavelength long at `fixture_frequency_hz`.
    DipoleHalfwave,
    /// Port terminated in four parallel 200 ohm edges.
    MatchedLoad,
    /// Port with nothing attached.
    OpenPort,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::SinglePatch,
        Preset::DoubleT,
        Preset::Paper3x3,
        Preset::CavityTe101,
        Preset::DipoleHertzian,
        Preset::DipoleHalfwave,
        Preset::MatchedLoad,
        Preset::OpenPort,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SinglePatch => "single-patch",
            Preset::DoubleT => "double-t",
            Preset::Paper3x3 => "paper-3x3",
            Preset::CavityTe101 => "cavity-te101",
            Preset::DipoleHertzian => "dipole-hertzian",
            Preset::DipoleHalfwave => "dipole-halfwave",
            Preset::MatchedLoad => "matched-load",
            Preset::OpenPort => "open-port",
        }
    }

    pub fn from_name(name: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::geometry(format!("unknown preset '{name}' (expected one of {})", names.join(", ")))
            })
    }

    /// True for presets that are described by a scene.
    pub fn has_scene(self) -> bool {
        !matches!(self, Preset::CavityTe101 | Preset::MatchedLoad | Preset::OpenPort)
    }

    pub fn default_cell_mm(self) -> f64 {
        match self {
            Preset::SinglePatch | Preset::DoubleT | Preset::Paper3x3 => 0.15,
            Preset::CavityTe101 => 0.5,
            Preset::DipoleHertzian | Preset::DipoleHalfwave => 1.0,
            Preset::MatchedLoad | Preset::OpenPort => 0.02,
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Every dimension of the slotted-array family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperParams {
    pub patch_length_mm: f64,
    pub patch_width_mm: f64,
    pub slots: TSlotParams,
    pub array: ArrayParams,
    pub feed: FeedParams,
    pub substrate: SubstrateSpec,
    /// Size of the ground aperture relative to a patch slot.
    pub rear_slot_scale: f64,
}

impl Default for PaperParams {
    fn default() -> Self {
        PaperParams {
            patch_length_mm: 6.23,
            patch_width_mm: 7.41,
            slots: TSlotParams::table1(),
            array: ArrayParams::table1(),
            feed: FeedParams::table1(),
            substrate: SubstrateSpec::rt5880(),
            rear_slot_scale: 1.0,
        }
    }
}

/// Names accepted by [`PaperParams::set`].
pub const SWEEP_PARAMETERS: [&str; 11] = [
    "g", "rotation_deg", "t_l", "t_w", "t_b", "t_a", "t_d", "patch_l", "patch_w", "feed_l", "rear_scale",
];

impl PaperParams {
    /// Sets one named dimension (see [`SWEEP_PARAMETERS`]).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "g" => self.array.gap_mm = value,
            "rotation_deg" => self.array.element_rotation_deg = value,
            "t_l" => self.slots.bar_length_mm = value,
            "t_w" => self.slots.slot_width_mm = value,
            "t_b" => self.slots.bar_breadth_mm = value,
            "t_a" => self.slots.arm_mm = value,
            "t_d" => self.slots.pair_separation_mm = value,
            "patch_l" => self.patch_length_mm = value,
            "patch_w" => self.patch_width_mm = value,
            "feed_l" => self.feed.line_length_mm = value,
            "rear_scale" => self.rear_slot_scale = value,
            _ => {
                return Err(Error::geometry(format!(
                    "unknown parameter '{name}' (expected one of {})",
                    SWEEP_PARAMETERS.join(", ")
                )))
            }
        }
        Ok(())
    }
}

/// Builds the scene of an antenna preset. `cell_mm` is only used by the
/// dipoles, whose gap is one cell.
pub fn preset_scene(preset: Preset, p: &PaperParams, cell_mm: f64) -> Result<Scene> {
    match preset {
        Preset::SinglePatch => {
            let d = design_patch(6e9, &p.substrate, Some(p.substrate.height_mm))?;
            let e = build_patch_element(d.patch_length_mm, d.patch_width_mm)?;
            let a = ArrayParams { rows: 1, cols: 1, ..p.array };
            let s = tile_array(&e, &a)?.with_substrate(p.substrate)?;
            let mut s = add_feed(s, &p.feed)?;
            let (lo, hi) = (s.bbox.min, s.bbox.max);
            s.push(Primitive::metal(Shape::Rect { min: [lo[0], lo[1]], max: [hi[0], hi[1]] }, Layer::GroundMetal));
            Ok(s)
        }
        Preset::DoubleT | Preset::Paper3x3 => {
            let e = apply_double_t_slots(build_patch_element(p.patch_length_mm, p.patch_width_mm)?, &p.slots)?;
            let a = if preset == Preset::DoubleT { ArrayParams { rows: 1, cols: 1, ..p.array } } else { p.array };
            let s = tile_array(&e, &a)?.with_substrate(p.substrate)?;
            let s = add_feed(s, &p.feed)?;
            add_ground_with_rear_slot(s, &p.slots, p.rear_slot_scale)
        }
        Preset::DipoleHertzian => {
            check_cell(cell_mm)?;
            Ok(Scene::empty([0.0; 3], [0.0, 0.0, cell_mm]).with_port(PortPlacement {
                start_mm: [0.0; 3],
                axis: Axis::Z,
                length_mm: cell_mm,
                resistance_ohms: 50.0,
            }))
        }
        Preset::DipoleHalfwave => {
            check_cell(cell_mm)?;
            let arm = halfwave_arm_cells(cell_mm);
            let d = cell_mm;
            let top = (2 * arm + 1) as f64 * d;
            let mut s = Scene::empty([0.0; 3], [0.0, 0.0, top]);
            s.push(Primitive::metal(Shape::Wire { start: [0.0; 3], end: [0.0, 0.0, arm as f64 * d] }, Layer::Volume));
            s.push(Primitive::metal(Shape::Wire { start: [0.0, 0.0, (arm + 1) as f64 * d], end: [0.0, 0.0, top] }, Layer::Volume));
            Ok(s.with_port(PortPlacement {
                start_mm: [0.0, 0.0, arm as f64 * d],
                axis: Axis::Z,
                length_mm: d,
                resistance_ohms: 50.0,
            }))
        }
        _ => Err(Error::geometry(format!("preset '{preset}' is a grid fixture without a scene"))),
    }
}

fn check_cell(cell_mm: f64) -> Result<()> {
    if cell_mm > 0.0 && cell_mm.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("cell size {cell_mm} mm must be positive")))
    }
}

/// Design frequency of the half-wave dipole fixture.
pub const HALFWAVE_FREQUENCY_HZ: f64 = 7.5e9;

/// Arm length in cells so that the dipole (arms plus gap) is half a wavelength.
fn halfwave_arm_cells(cell_mm: f64) -> usize {
    let half = crate::C0 / HALFWAVE_FREQUENCY_HZ / 2.0 * 1e3;
    (((half / cell_mm) - 1.0) / 2.0).round().max(1.0) as usize
}

/// Hints for turning a fixture run into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisHints {
    pub band_hz: (f64, f64),
    /// Frequencies at which far fields are recorded.
    pub far_field_hz: Vec<f64>,
    pub expected_resonance_hz: Option<f64>,
}

/// A grid ready to run, with matching solver settings.
#[derive(Debug, Clone)]
pub struct Fixture {
    /// `None` for scenes loaded from files.
    pub preset: Option<Preset>,
    pub grid: MaterialGrid,
    pub config: SolverConfig,
    pub hints: AnalysisHints,
}

/// Options common to every fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureOptions {
    pub cell_mm: f64,
    pub band_hz: (f64, f64),
    pub cpml_cells: Option<usize>,
    pub max_steps: Option<usize>,
}

impl FixtureOptions {
    pub fn for_preset(p: Preset) -> FixtureOptions {
        let band_hz = match p {
            Preset::CavityTe101 => (6e9, 13e9),
            Preset::DipoleHertzian | Preset::DipoleHalfwave => (3e9, 12e9),
            _ => (4e9, 16e9),
        };
        FixtureOptions { cell_mm: p.default_cell_mm(), band_hz, cpml_cells: None, max_steps: None }
    }
}

/// Full run setup of a preset.
pub fn fixture(preset: Preset, params: &PaperParams, opts: &FixtureOptions) -> Result<Fixture> {
    check_cell(opts.cell_mm)?;
    let d = opts.cell_mm * 1e-3;
    let source = SourceSpec::for_band(opts.band_hz.0, opts.band_hz.1, 1.0)?;
    let auto = |cap: usize| StepControl::Auto { max_steps: opts.max_steps.unwrap_or(cap), decay_db: 60.0 };
    let mut hints = AnalysisHints { band_hz: opts.band_hz, far_field_hz: Vec::new(), expected_resonance_hz: None };
    let (grid, config) = match preset {
        Preset::CavityTe101 => {
            let n = [20.0, 10.0, 25.0].map(|mm: f64| (mm / opts.cell_mm).round() as usize);
            if n.iter().any(|&v| v < 2) {
                return Err(Error::domain("cell too coarse for the cavity"));
            }
            let mut g = MaterialGrid::vacuum(n[0], n[1], n[2], [20e-3 / n[0] as f64, 10e-3 / n[1] as f64, 25e-3 / n[2] as f64]);
            // y-directed current filament through the center, nearly an ideal current source
            g.port = Some(PortSpan { node: [n[0] / 2, 0, n[2] / 2], axis: Axis::Y, cells: n[1], resistance_ohms: 1e6 });
            hints.expected_resonance_hz = Some(crate::oracles::cavity_resonance(&crate::oracles::CavitySpec::te101(20.0, 10.0, 25.0))?);
            // lossless cavity: ring for a fixed 12 ns
            let dt_est = 0.98 * d / (crate::C0 * 3f64.sqrt());
            let steps = opts.max_steps.unwrap_or((12e-9 / dt_est).ceil() as usize);
            let cfg = SolverConfig { cpml: CpmlParams::none(), source, steps: StepControl::Fixed { steps }, ..Default::default() };
            (g, cfg)
        }
        Preset::MatchedLoad | Preset::OpenPort => {
            let mut g = MaterialGrid::vacuum(12, 12, 6, [d; 3]);
            g.port = Some(PortSpan { node: [6, 6, 0], axis: Axis::Z, cells: 1, resistance_ohms: 50.0 });
            let mut loads = Vec::new();
            if preset == Preset::MatchedLoad {
                g.set_pec_plate_z(1, [5, 5], [7, 7]);
                for n in [[5, 6, 0], [7, 6, 0], [6, 5, 0], [6, 7, 0]] {
                    loads.push(PortSpan { node: n, axis: Axis::Z, cells: 1, resistance_ohms: 200.0 });
                }
            }
            let cfg = SolverConfig { cpml: CpmlParams::none(), source, steps: auto(400_000), lumped_loads: loads, ..Default::default() };
            (g, cfg)
        }
        _ => {
            let scene = preset_scene(preset, params, opts.cell_mm)?;
            let (margin_mm, far, gap) = match preset {
                Preset::DipoleHertzian => (8.0 * opts.cell_mm, vec![4e9, 6e9, 8e9, 10e9], 2),
                Preset::DipoleHalfwave => (8.0 * opts.cell_mm, vec![HALFWAVE_FREQUENCY_HZ], 2),
                _ => (ANTENNA_MARGIN_MM, antenna_far_field_frequencies(), 3),
            };
            let mut f = open_fixture(&scene, opts, margin_mm, far, gap)?;
            f.preset = Some(preset);
            return Ok(f);
        }
    };
    Ok(Fixture { preset: Some(preset), grid, config, hints })
}

/// Air between the structure and the absorbing layer for antenna runs.
pub const ANTENNA_MARGIN_MM: f64 = 5.0;

/// Run setup of an arbitrary scene with the antenna-preset settings.
/// Pattern frequencies are restricted to the source band.
pub fn scene_fixture(scene: &Scene, opts: &FixtureOptions) -> Result<Fixture> {
    open_fixture(scene, opts, ANTENNA_MARGIN_MM, antenna_far_field_frequencies(), 3)
}

fn open_fixture(scene: &Scene, opts: &FixtureOptions, margin_mm: f64, far: Vec<f64>, gap: usize) -> Result<Fixture> {
    check_cell(opts.cell_mm)?;
    if !(opts.band_hz.0 > 0.0 && opts.band_hz.1 > opts.band_hz.0) {
        return Err(Error::Config(format!("invalid frequency window {:?} Hz", opts.band_hz)));
    }
    let far: Vec<f64> = far.into_iter().filter(|f| *f >= opts.band_hz.0 && *f <= opts.band_hz.1).collect();
    let source = SourceSpec::for_band(opts.band_hz.0, opts.band_hz.1, 1.0)?;
    let cpml = CpmlParams { cells: opts.cpml_cells.unwrap_or(10), ..Default::default() };
    let vox = VoxelOptions {
        cell_mm: opts.cell_mm,
        air_margin_mm: margin_mm,
        boundary_cells: cpml.cells,
        reference_frequency_hz: 10e9,
        ..Default::default()
    };
    let grid = voxelize(scene, &vox)?;
    let config = SolverConfig {
        cpml,
        source,
        steps: StepControl::Auto { max_steps: opts.max_steps.unwrap_or(200_000), decay_db: 60.0 },
        huygens: if far.is_empty() { None } else { Some(HuygensSpec { gap_cells: gap, frequencies_hz: far.clone() }) },
        ..Default::default()
    };
    let hints = AnalysisHints { band_hz: opts.band_hz, far_field_hz: far, expected_resonance_hz: None };
    Ok(Fixture { preset: None, grid, config, hints })
}

/// Pattern frequencies for the antenna presets: every 0.25 GHz over
/// 4-16 GHz plus the published peak-gain and best-match frequencies.
pub fn antenna_far_field_frequencies() -> Vec<f64> {
    let mut f: Vec<f64> = (0..=48).map(|k| 4e9 + k as f64 * 0.25e9).collect();
    f.extend([8.43e9, 15.35e9]);
    f.sort_by(f64::total_cmp);
    f
}
