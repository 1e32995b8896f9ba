//! Size a patch, then simulate and analyze the dipole fixture.
//!
//! `cargo run --release -p patchfield --example quickstart`

use patchfield::analysis::{analyze_run, AnalyzeOptions};
use patchfield::design::{design_patch, SubstrateSpec};
use patchfield::presets::{fixture, FixtureOptions, PaperParams, Preset};
use patchfield::solver::run_grid;

fn main() -> patchfield::Result<()> {
    let substrate = SubstrateSpec::new(2.2, 0.0009, 0.766)?;
    let d = design_patch(6e9, &substrate, Some(substrate.height_mm))?;
    println!("6 GHz patch, er 2.2, h 0.766 mm: W = {:.3} mm, L = {:.3} mm", d.patch_width_mm, d.patch_length_mm);

    let preset = Preset::DipoleHertzian;
    let fx = fixture(preset, &PaperParams::default(), &FixtureOptions::for_preset(preset))?;
    let run = run_grid(&fx.grid, &fx.config)?;
    let a = analyze_run(&run, &AnalyzeOptions::default())?;
    for p in &a.patterns {
        println!("{:.2} GHz: directivity {:.3} dBi", p.frequency_hz / 1e9, p.peak_directivity().0);
    }
    Ok(())
}
