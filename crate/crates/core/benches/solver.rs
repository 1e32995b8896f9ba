//! Sequential vs rayon throughput of the field update and the far-field
//! transform. Run with `cargo bench -p patchfield`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use patchfield::analysis::{ntff_transform, AngularGrid};
use patchfield::geometry::{Axis, MaterialGrid, PortSpan};
use patchfield::par::Parallelism;
use patchfield::presets::{fixture, FixtureOptions, PaperParams, Preset};
use patchfield::solver::{run_grid, CpmlParams, Simulation, SolverConfig, StepControl};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Rayon)];

fn patch_box(n: usize) -> MaterialGrid {
    let mut g = MaterialGrid::vacuum(n, n, n, [0.5e-3; 3]);
    let (a, b) = (n / 3, 2 * n / 3);
    g.set_block([a, a, a], [b, b, a + 3], 2.2, 1e-3);
    g.set_pec_plate_z(a + 3, [a + 1, a + 1], [b - 1, b - 1]);
    g.port = Some(PortSpan { node: [n / 2, n / 2, a], axis: Axis::Z, cells: 3, resistance_ohms: 50.0 });
    g
}

fn steps(c: &mut Criterion) {
    const STEPS: usize = 20;
    let mut group = c.benchmark_group("fdtd_steps");
    group.sample_size(10);
    for n in [40, 64] {
        let grid = patch_box(n);
        group.throughput(Throughput::Elements((n * n * n * STEPS) as u64));
        for (name, mode) in MODES {
            let cfg = SolverConfig {
                cpml: CpmlParams { cells: 8, ..Default::default() },
                steps: StepControl::Fixed { steps: usize::MAX },
                parallelism: mode,
                ..Default::default()
            };
            let mut sim = Simulation::new(&grid, &cfg).unwrap();
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| (0..STEPS).for_each(|_| sim.step().unwrap())));
        }
    }
    group.finish();
}

fn far_field(c: &mut Criterion) {
    let preset = Preset::DipoleHertzian;
    let mut opts = FixtureOptions::for_preset(preset);
    opts.max_steps = Some(400);
    let fx = fixture(preset, &PaperParams::default(), &opts).unwrap();
    let run = run_grid(&fx.grid, &fx.config).unwrap();
    let h = run.huygens.expect("fixture records a Huygens box");
    let f = h.frequencies_hz[0];
    let grid = AngularGrid::default();
    let mut group = c.benchmark_group("ntff");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(name, |b| b.iter(|| ntff_transform(&h, f, &grid, None, mode).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, steps, far_field);
criterion_main!(benches);
