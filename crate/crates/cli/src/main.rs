mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patchfield::analysis::{analyze_run, find_resonance, report, AnalyzeOptions, AngularGrid};
use patchfield::design::{design_patch_with, compute_substrate_height, LengthModel, SubstrateSpec};
use patchfield::geometry::{read_scene, voxelize, write_grid, write_scene, write_stl, Scene, VoxelOptions};
use patchfield::par::Parallelism;
use patchfield::presets::{fixture, preset_scene, scene_fixture, Fixture, Preset};
use patchfield::solver::{run_grid_with, Progress, RunOutput, StepControl};
use patchfield::sweep::{run_sweep, write_sweep_csv, PointStatus, SweepJob, SweepSpec};
use patchfield::{Error, Result};
use serde::Serialize;

use config::{parse_assignment, RunConfig, RunFlags, SweepBlock};

const THREADS_ENV: &str = "PATCHFIELD_THREADS";

const AFTER_HELP: &str = "\
Environment:
  PATCHFIELD_THREADS   number of worker threads for data-parallel loops
                       (default: one per CPU)
  RUST_LOG             log filter, e.g. RUST_LOG=debug

Exit codes:
  0 success, 1 usage, 2 design, 3 geometry, 4 solver, 5 analysis";

#[derive(Parser)]
#[command(name = "patchfield", version, about = "Microstrip patch array design, FDTD simulation and analysis", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size a rectangular patch with the transmission-line model.
    Design(DesignArgs),
    /// Build a preset scene, optionally rasterized.
    Geometry(GeometryArgs),
    /// Run the FDTD solver and write a run directory.
    Simulate(SimulateArgs),
    /// Turn a run directory into S11, bands, patterns and metrics.
    Analyze(AnalyzeArgs),
    /// Vary one array dimension, one simulation per point.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    fr_ghz: f64,
    /// Relative permittivity of the substrate.
    #[arg(long)]
    er: f64,
    /// Substrate height; derived from the frequency when omitted.
    #[arg(long)]
    h_mm: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    tan_delta: f64,
    /// `single` subtracts one fringing extension, `double` one per edge.
    #[arg(long, default_value = "single")]
    length_model: String,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long, default_value = "paper-3x3", conflicts_with = "scene")]
    preset: String,
    /// Re-read and validate a scene file instead of building a preset.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Array gap g in mm.
    #[arg(long, default_value_t = 2.2)]
    gap_mm: f64,
    /// Rotation between neighbouring elements in degrees.
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    rotation_deg: f64,
    /// Override a named dimension, e.g. `--param t_l=2.6` (repeatable).
    #[arg(long = "param", value_parser = parse_assignment)]
    params: Vec<(String, f64)>,
    /// Cell size used for dipole presets and for rasterization.
    #[arg(long)]
    cell_mm: Option<f64>,
    /// Write the scene JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also rasterize and write the material grid.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    /// Also rasterize and write the metal as ASCII STL.
    #[arg(long)]
    stl_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Suppress progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory written by `simulate`.
    run_dir: PathBuf,
    /// Where to write artifacts (default: the run directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    threshold_db: f64,
    #[arg(long)]
    fmin_ghz: Option<f64>,
    #[arg(long)]
    fmax_ghz: Option<f64>,
    #[arg(long, default_value_t = 181)]
    theta_points: usize,
    #[arg(long, default_value_t = 73)]
    phi_points: usize,
    /// Write report.md comparing with the published 3x3 results (automatic for paper-3x3 runs).
    #[arg(long)]
    report: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Dimension to vary (g, rotation_deg, t_l, t_w, t_b, t_a, t_d, patch_l, patch_w, feed_l, rear_scale).
    #[arg(long)]
    sweep_param: Option<String>,
    /// Explicit comma-separated values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    stop: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Design = 2,
    Geometry = 3,
    Solver = 4,
    Analysis = 5,
}

/// Exit code of an error raised while in `stage`.
fn exit_code(e: &Error, stage: Stage) -> u8 {
    let s = match e {
        Error::InfeasibleDesign(_) | Error::Singularity(_) => Stage::Design,
        Error::Domain(_) if stage == Stage::Design => Stage::Design,
        Error::Geometry(_) => Stage::Geometry,
        Error::Config(_) | Error::Resource(_) | Error::Divergence { .. } => Stage::Solver,
        Error::Analysis(_) | Error::FrequencyLookup(_) | Error::EnergyAccounting(_) => Stage::Analysis,
        _ => stage,
    };
    s as u8
}

struct Failure {
    error: Error,
    stage: Stage,
}

trait At<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, Failure>;
}

impl<T> At<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { error, stage })
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let r = match cli.command {
        Command::Design(a) => cmd_design(&a),
        Command::Geometry(a) => cmd_geometry(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(exit_code(&f.error, f.stage))
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV}='{v}' is not a thread count"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_design(a: &DesignArgs) -> CmdResult {
    let st = Stage::Design;
    let model = match a.length_model.as_str() {
        "single" => LengthModel::Single,
        "double" => LengthModel::Double,
        m => return Err(Failure { error: Error::Domain(format!("unknown length model '{m}'")), stage: st }),
    };
    let f = a.fr_ghz * 1e9;
    let h = match a.h_mm {
        Some(h) => h,
        None => compute_substrate_height(f, a.er).at(st)?,
    };
    let sub = SubstrateSpec::new(a.er, a.tan_delta, h).at(st)?;
    let d = design_patch_with(f, &sub, a.h_mm, model).at(st)?;
    emit_json(&d, a.out.as_deref()).at(st)
}

fn cmd_geometry(a: &GeometryArgs) -> CmdResult {
    let st = Stage::Geometry;
    let (scene, cell) = match &a.scene {
        Some(p) => (read_scene(p).at(st)?, a.cell_mm.unwrap_or(0.15)),
        None => {
            let preset = Preset::from_name(&a.preset).at(st)?;
            if !preset.has_scene() {
                return Err(Failure {
                    error: Error::Geometry(format!("preset '{preset}' is a solver fixture without a scene")),
                    stage: st,
                });
            }
            let mut cfg = RunConfig::default();
            cfg.params.insert("g".into(), a.gap_mm);
            cfg.params.insert("rotation_deg".into(), a.rotation_deg);
            for (k, v) in &a.params {
                cfg.params.insert(k.clone(), *v);
            }
            let params = cfg.paper_params().at(st)?;
            let cell = a.cell_mm.unwrap_or(preset.default_cell_mm());
            (preset_scene(preset, &params, cell).at(st)?, cell)
        }
    };
    scene.validate().at(st)?;
    match &a.out {
        Some(p) => write_scene(&scene, p).at(st)?,
        None => emit_json(&scene, None).at(st)?,
    }
    if a.grid_out.is_some() || a.stl_out.is_some() {
        let g = voxelize(&scene, &VoxelOptions { cell_mm: cell, ..Default::default() }).at(st)?;
        if let Some(p) = &a.grid_out {
            write_grid(&g, p).at(st)?;
        }
        if let Some(p) = &a.stl_out {
            write_stl(&g, p).at(st)?;
        }
        let s = scene.bbox.size();
        eprintln!(
            "scene {:.3} x {:.3} x {:.3} mm, grid {} x {} x {} cells",
            s[0], s[1], s[2], g.nx, g.ny, g.nz
        );
    }
    Ok(())
}

fn parallelism(cfg: &RunConfig) -> Parallelism {
    if cfg.sequential == Some(true) {
        Parallelism::Sequential
    } else {
        Parallelism::Rayon
    }
}

/// Grid and solver settings for a resolved configuration.
fn build_fixture(cfg: &RunConfig) -> std::result::Result<Fixture, Failure> {
    let st = Stage::Geometry;
    let preset = cfg.preset().at(st)?;
    let opts = cfg.fixture_options(preset).at(Stage::Solver)?;
    let mut fx = match (preset, &cfg.scene) {
        (Some(p), _) => fixture(p, &cfg.paper_params().at(st)?, &opts).at(st)?,
        (None, Some(path)) => {
            if !cfg.params.is_empty() {
                return Err(Failure { error: Error::Geometry("dimension overrides need a preset".into()), stage: st });
            }
            let scene: Scene = read_scene(path).at(st)?;
            scene_fixture(&scene, &opts).at(st)?
        }
        (None, None) => {
            return Err(Failure { error: Error::Config("give --preset or --scene".into()), stage: Stage::Solver })
        }
    };
    if let Some(n) = cfg.steps {
        fx.config.steps = StepControl::Fixed { steps: n };
    }
    fx.config.parallelism = parallelism(cfg);
    Ok(fx)
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let st = Stage::Solver;
    let cfg = RunConfig::resolve(&a.run).at(st)?;
    let fx = build_fixture(&cfg)?;
    let dir = cfg.output_dir("run");
    let every = cfg.progress_every.unwrap_or(1000);
    let quiet = a.quiet || every == 0;
    let g = &fx.grid;
    if !quiet {
        eprintln!("grid {} x {} x {} cells ({} total)", g.nx, g.ny, g.nz, g.cells());
    }
    let mut next = every;
    let mut observer = |p: &Progress| {
        if !quiet && p.step >= next {
            eprintln!("step {:>8}  t = {:>9.4} ns  energy = {:.6e} J", p.step, p.time_s * 1e9, p.energy_j);
            next = (p.step / every + 1) * every;
        }
    };
    let out = run_grid_with(&fx.grid, &fx.config, &mut observer).at(st)?;
    out.write(&dir).at(st)?;
    emit_json(&cfg, Some(&dir.join("config.json"))).at(st)?;
    if !a.quiet {
        eprintln!("{} steps written to {}", out.metadata.steps, dir.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ResonanceEstimate {
    frequency_hz: f64,
    expected_hz: f64,
    relative_error: f64,
}

fn cmd_analyze(a: &AnalyzeArgs) -> CmdResult {
    let st = Stage::Analysis;
    let run = RunOutput::load(&a.run_dir)
        .map_err(|e| Error::Analysis(format!("cannot load run from {}: {e}", a.run_dir.display())))
        .at(st)?;
    let cfg = match a.run_dir.join("config.json") {
        p if p.exists() => Some(RunConfig::load(&p).at(st)?),
        _ => None,
    };
    let preset = cfg.as_ref().and_then(|c| c.preset().ok().flatten());
    let source_band = run.config.source.band_edges(20.0);
    let band_hz = (
        a.fmin_ghz.map_or(source_band.0, |f| f * 1e9),
        a.fmax_ghz.map_or(source_band.1, |f| f * 1e9),
    );
    let opts = AnalyzeOptions {
        threshold_db: a.threshold_db,
        band_hz: Some(band_hz),
        angular: AngularGrid::uniform(a.theta_points, a.phi_points),
        ..Default::default()
    };
    let res = analyze_run(&run, &opts).at(st)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let dir = a.out.clone().unwrap_or_else(|| a.run_dir.clone());
    res.write(&dir).at(st)?;

    if preset == Some(Preset::CavityTe101) {
        let dt = run.metadata.dt_s;
        let start = (run.config.source.end_time() / dt).ceil() as usize;
        let expected = patchfield::oracles::cavity_resonance(&patchfield::oracles::CavitySpec::te101(20.0, 10.0, 25.0)).at(st)?;
        if run.port.len() > start + 16 {
            let f = find_resonance(&run.port.v[start..], dt, band_hz.0, band_hz.1).at(st)?;
            let r = ResonanceEstimate { frequency_hz: f, expected_hz: expected, relative_error: (f - expected).abs() / expected };
            emit_json(&r, Some(&dir.join("resonance.json"))).at(st)?;
            println!("resonance {:.4} GHz (analytic {:.4} GHz)", f / 1e9, expected / 1e9);
        }
    }
    if a.report || preset == Some(Preset::Paper3x3) {
        std::fs::write(dir.join("report.md"), report::paper_report(&res.metrics)).map_err(Error::from).at(st)?;
    }

    println!("bands at or below {} dB: {}", a.threshold_db, res.bands.len());
    for b in &res.bands {
        println!("  {}", report::format_band(b));
    }
    println!(
        "min S11 {:.2} dB at {:.3} GHz",
        res.metrics.min_s11_db,
        res.metrics.min_s11_frequency_hz / 1e9
    );
    if let (Some(g), Some(f)) = (res.metrics.peak_gain_dbi, res.metrics.peak_gain_frequency_hz) {
        println!("peak gain {g:.2} dBi at {:.3} GHz", f / 1e9);
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let st = Stage::Solver;
    let mut cfg = RunConfig::resolve(&a.run).at(st)?;
    let mut block = cfg.sweep.clone().unwrap_or_default();
    let flags = SweepBlock {
        parameter: a.sweep_param.clone(),
        values: a.values.clone(),
        start: a.start,
        stop: a.stop,
        points: a.points,
    };
    if flags.parameter.is_some() {
        block.parameter = flags.parameter;
    }
    if flags.values.is_some() {
        block.values = flags.values;
    }
    if flags.start.is_some() || flags.stop.is_some() || flags.points.is_some() {
        block.values = None;
        block.start = flags.start.or(block.start);
        block.stop = flags.stop.or(block.stop);
        block.points = flags.points.or(block.points);
    }
    cfg.sweep = Some(block.clone());
    let parameter = block
        .parameter
        .clone()
        .ok_or_else(|| Error::Config("sweep needs --sweep-param".into()))
        .at(st)?;
    let spec = match (&block.values, block.start, block.stop, block.points) {
        (Some(v), ..) => SweepSpec { parameter, values: v.clone() },
        (None, Some(lo), Some(hi), Some(n)) => SweepSpec::linspace(&parameter, lo, hi, n).at(st)?,
        (None, Some(lo), None, None) => SweepSpec { parameter, values: vec![lo] },
        _ => return Err(Failure { error: Error::Config("sweep needs --values or --start/--stop/--points".into()), stage: st }),
    };
    spec.validate().at(Stage::Geometry)?;
    let preset = cfg
        .preset()
        .at(Stage::Geometry)?
        .ok_or_else(|| Error::Geometry("sweeps need a preset".into()))
        .at(Stage::Geometry)?;
    if cfg.steps.is_some() {
        return Err(Failure { error: Error::Config("sweeps stop on decay; use --max-steps".into()), stage: st });
    }
    let dir = cfg.output_dir("sweep");
    let job = SweepJob {
        preset,
        params: cfg.paper_params().at(Stage::Geometry)?,
        fixture: cfg.fixture_options(Some(preset)).at(st)?,
        analyze: AnalyzeOptions { threshold_db: cfg.threshold_db.unwrap_or(-10.0), ..Default::default() },
        spec,
        output_dir: dir.clone(),
        parallelism: parallelism(&cfg),
    };
    let rows = run_sweep(&job).at(st)?;
    write_sweep_csv(&rows, &dir.join("sweep.csv")).at(st)?;
    emit_json(&cfg, Some(&dir.join("config.json"))).at(st)?;
    let failed = rows.iter().filter(|r| r.status == PointStatus::Failed).count();
    println!("{} points, {failed} failed, table in {}", rows.len(), dir.join("sweep.csv").display());
    Ok(())
}
