use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn patchfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patchfield")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn design_reports_the_full_chain() {
    let d = json(&patchfield(&["design", "--fr-ghz", "6", "--er", "2.2", "--h-mm", "0.766"]));
    let w = d["patch_width_mm"].as_f64().unwrap();
    assert!((w / 19.750_562_346_257_65 - 1.0).abs() < 1e-12);
    assert!((d["patch_length_mm"].as_f64().unwrap() - 16.8545).abs() < 1e-4);

    let v = json(&patchfield(&["design", "--fr-ghz", "6", "--er", "1"]));
    assert_eq!(v["effective_permittivity"].as_f64(), Some(1.0));
    assert!((v["patch_width_mm"].as_f64().unwrap() - 24.982_704_833_333_333).abs() < 1e-12);
}

#[test]
fn design_errors_exit_with_two() {
    assert_eq!(code(&patchfield(&["design", "--fr-ghz=-1", "--er", "2.2", "--h-mm", "0.766"])), 2);
    assert_eq!(code(&patchfield(&["design", "--fr-ghz", "6", "--er", "0.5", "--h-mm", "0.766"])), 2);
    assert_eq!(code(&patchfield(&["design", "--fr-ghz", "6", "--er", "2.2", "--h-mm", "0"])), 2);
    assert_eq!(code(&patchfield(&["design", "--fr-ghz", "6", "--er", "2.2", "--length-model", "triple"])), 2);
}

#[test]
fn thick_substrate_at_sixty_gigahertz_still_yields_a_positive_length() {
    let d = json(&patchfield(&["design", "--fr-ghz", "60", "--er", "2.2", "--h-mm", "3"]));
    let l = d["patch_length_mm"].as_f64().unwrap();
    assert!(l > 0.0 && l < 1.0, "{l}");
}

#[test]
fn geometry_presets() {
    let s = json(&patchfield(&["geometry", "--preset", "paper-3x3"]));
    let bb = &s["bbox"];
    let width = bb["max"][0].as_f64().unwrap() - bb["min"][0].as_f64().unwrap();
    assert!((width - 26.63).abs() < 1e-12, "{width}");
    assert_eq!(s["elements"].as_array().unwrap().len(), 9);

    let one = json(&patchfield(&["geometry", "--preset", "single-patch"]));
    assert_eq!(one["elements"].as_array().unwrap().len(), 1);

    let r9 = json(&patchfield(&["geometry", "--preset", "paper-3x3", "--rotation-deg", "9"]));
    let rot: Vec<f64> = r9["elements"].as_array().unwrap().iter().map(|e| e["rotation_deg"].as_f64().unwrap()).collect();
    assert!(rot.contains(&9.0) && rot.contains(&0.0));

    let g = json(&patchfield(&["geometry", "--preset", "paper-3x3", "--gap-mm", "1.59"]));
    let w = g["bbox"]["max"][0].as_f64().unwrap() - g["bbox"]["min"][0].as_f64().unwrap();
    assert!((w - 25.41).abs() < 1e-9, "{w}");
}

#[test]
fn geometry_errors_exit_with_three() {
    assert_eq!(code(&patchfield(&["geometry", "--preset", "nope"])), 3);
    assert_eq!(code(&patchfield(&["geometry", "--preset", "paper-3x3", "--param", "t_l=40"])), 3);
    assert_eq!(code(&patchfield(&["geometry", "--preset", "cavity-te101"])), 3);
}

#[test]
fn zero_steps_give_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.json");
    let out = patchfield(&["geometry", "--preset", "double-t", "--out", scene.to_str().unwrap()]);
    assert!(out.status.success());
    let run = dir.path().join("run");
    let out = patchfield(&[
        "simulate", "--scene", scene.to_str().unwrap(), "--steps", "0", "--cell-mm", "0.5", "--out", run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(run.join("port.csv")).unwrap(), "step,time_s,v_volts,i_amps\n");
    assert_eq!(fs::read_to_string(run.join("energy.csv")).unwrap(), "step,energy_j\n");
    let meta = read_json(&run.join("run.json"));
    assert_eq!(meta["result"]["steps"].as_u64(), Some(0));
    // nothing to analyze
    assert_eq!(code(&patchfield(&["analyze", run.to_str().unwrap()])), 5);
}

#[test]
fn missing_run_exits_with_five() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&patchfield(&["analyze", dir.path().join("none").to_str().unwrap()])), 5);
}

#[test]
fn solver_configuration_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = out.to_str().unwrap();
    assert_eq!(code(&patchfield(&["simulate", "--out", o])), 4);
    assert_eq!(code(&patchfield(&["simulate", "--preset", "matched-load", "--fmin-ghz", "9", "--fmax-ghz", "3", "--out", o])), 4);
    assert_eq!(code(&patchfield(&["simulate", "--preset", "matched-load", "--cell-mm", "0", "--out", o])), 4);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&patchfield(&["--bogus"])), 1);
    let help = patchfield(&["--help"]);
    assert!(help.status.success());
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("PATCHFIELD_THREADS"));
    assert!(text.contains("4 solver"));
    let out = Command::new(env!("CARGO_BIN_EXE_patchfield"))
        .env("PATCHFIELD_THREADS", "0")
        .args(["design", "--fr-ghz", "6", "--er", "2.2"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

fn simulate_matched(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--preset", "matched-load", "--progress-every", "5000", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = Command::new(env!("CARGO_BIN_EXE_patchfield")).env("PATCHFIELD_THREADS", "2").args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn matched_load_run_and_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = simulate_matched(&run, &[]);
    let progress = String::from_utf8_lossy(&out.stderr);
    assert!(progress.lines().any(|l| l.starts_with("step") && l.contains("energy")), "{progress}");

    let a10 = dir.path().join("a10");
    let out = patchfield(&["analyze", run.to_str().unwrap(), "--out", a10.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["s11.s1p", "s11.csv", "bands.json", "metrics.json"] {
        assert!(a10.join(f).exists(), "{f}");
    }
    let bands = read_json(&a10.join("bands.json"));
    let b = bands.as_array().unwrap();
    assert_eq!(b.len(), 1);
    assert!(b[0]["f_low_hz"].as_f64().unwrap() < 4.1e9 && b[0]["f_high_hz"].as_f64().unwrap() > 15.9e9);

    let a3 = dir.path().join("a3");
    let out = patchfield(&["analyze", run.to_str().unwrap(), "--threshold-db", "-3", "--out", a3.to_str().unwrap()]);
    assert!(out.status.success());
    let b3 = read_json(&a3.join("bands.json"));
    let w = |v: &Value| v["f_high_hz"].as_f64().unwrap() - v["f_low_hz"].as_f64().unwrap();
    assert!(w(&b3[0]) >= w(&b[0]));
    let s1p = fs::read_to_string(a10.join("s11.s1p")).unwrap();
    assert!(s1p.contains("# GHz S RI R 50"));
}

#[test]
fn reruns_are_byte_identical_outside_run_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate_matched(&a, &["--max-steps", "3000"]);
    simulate_matched(&b, &["--max-steps", "3000", "--sequential"]);
    for f in ["port.csv", "energy.csv", "probes.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (mut ja, mut jb) = (read_json(&a.join("run.json")), read_json(&b.join("run.json")));
    ja.as_object_mut().unwrap().remove("metadata");
    jb.as_object_mut().unwrap().remove("metadata");
    // the sequential flag is the only intended difference
    jb["config"]["parallelism"] = ja["config"]["parallelism"].clone();
    assert_eq!(ja, jb);
    simulate_matched(&a, &["--max-steps", "3000", "--sequential"]);
    assert_eq!(fs::read(a.join("port.csv")).unwrap(), fs::read(b.join("port.csv")).unwrap());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let run = dir.path().join("run");
    fs::write(&cfg, format!(r#"{{"preset": "open-port", "max_steps": 900, "output_dir": "{}"}}"#, run.display())).unwrap();
    let out = patchfield(&["simulate", "--config", cfg.to_str().unwrap(), "--max-steps", "500", "-q"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let used = read_json(&run.join("config.json"));
    assert_eq!(used["max_steps"].as_u64(), Some(500));
    assert_eq!(used["preset"].as_str(), Some("open-port"));
    assert_eq!(read_json(&run.join("run.json"))["result"]["steps"].as_u64(), Some(500));

    fs::write(&cfg, r#"{"preset": "open-port", "cell": 1}"#).unwrap();
    assert_eq!(code(&patchfield(&["simulate", "--config", cfg.to_str().unwrap()])), 4);
}

#[test]
fn single_point_sweep_matches_simulate_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let out = patchfield(&[
        "sweep", "--preset", "matched-load", "--sweep-param", "g", "--values", "2.2", "--out", sweep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    simulate_matched(&run, &["-q"]);
    assert!(patchfield(&["analyze", run.to_str().unwrap()]).status.success());
    let point = sweep.join("point_000");
    for f in ["port.csv", "energy.csv", "s11.csv", "s11.s1p", "bands.json", "metrics.json"] {
        assert_eq!(fs::read(point.join(f)).unwrap(), fs::read(run.join(f)).unwrap(), "{f}");
    }
    let table = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("0,g,2.2,ok,1,"));
}

#[test]
fn sweeps_keep_going_past_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let out = patchfield(&[
        "sweep", "--preset", "double-t", "--cell-mm", "0.5", "--max-steps", "60", "--sweep-param", "t_l", "--start", "2.0",
        "--stop", "40", "--points", "5", "--fmin-ghz", "6", "--fmax-ghz", "10", "--out", sweep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(sweep.join("sweep.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let value = header.iter().position(|h| h == "value").unwrap();
    let status = header.iter().position(|h| h == "status").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let values: Vec<f64> = rows.iter().map(|r| r[value].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(&rows[4][status], "failed");
    assert!(sweep.join("config.json").exists());
}

#[test]
fn sweeps_need_a_known_parameter_and_a_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("s");
    let o = o.to_str().unwrap();
    assert_eq!(code(&patchfield(&["sweep", "--preset", "double-t", "--sweep-param", "zz", "--values", "1", "--out", o])), 3);
    assert_eq!(code(&patchfield(&["sweep", "--preset", "double-t", "--out", o])), 4);
}
