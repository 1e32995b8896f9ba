//! Run records and their on-disk layout.
//!
//! A run directory holds `port.csv`, `probes.csv`, `energy.csv`, an optional
//! `huygens.bin` and `run.json`. Numbers are written in Rust's shortest
//! round-trip form, so reloading gives bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::huygens::HuygensData;
use super::{GridSpec, Probe, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::PortSpan;

/// Port voltage and current, both at `(n + 1/2) dt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PortRecord {
    pub step: Vec<usize>,
    pub time_s: Vec<f64>,
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

impl PortRecord {
    pub fn push(&mut self, step: usize, t: f64, v: f64, i: f64) {
        self.step.push(step);
        self.time_s.push(t);
        self.v.push(v);
        self.i.push(i);
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Uniform sample interval of the record.
    pub fn dt(&self) -> Option<f64> {
        if self.time_s.len() < 2 {
            return None;
        }
        Some(self.time_s[1] - self.time_s[0])
    }
}

/// One probe's samples, taken after each E update.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub probe: Probe,
    pub values: Vec<f64>,
}

impl ProbeRecord {
    fn column_name(&self) -> String {
        let [i, j, k] = self.probe.index;
        let c = serde_json::to_value(self.probe.component).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        format!("{c}_{i}_{j}_{k}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dt_s: f64,
    pub steps: usize,
    /// True if a fixed step count completed or the auto criterion fired.
    pub decayed: bool,
    pub warnings: Vec<String>,
    pub grid: GridSpec,
    pub port: Option<PortSpan>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: SolverConfig,
    pub metadata: RunMetadata,
    pub port: PortRecord,
    pub probes: Vec<ProbeRecord>,
    pub huygens: Option<HuygensData>,
    /// `(step, energy)` at the check cadence.
    pub energy: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RunResult {
    dt_s: f64,
    steps: usize,
    decayed: bool,
    warnings: Vec<String>,
    port: Option<PortSpan>,
    probes: Vec<Probe>,
    has_huygens: bool,
}

/// Volatile values live only here, so two identical runs differ only in this block.
#[derive(Serialize, Deserialize)]
struct Volatile {
    elapsed_s: f64,
    written_unix_s: u64,
    version: String,
}

#[derive(Serialize, Deserialize)]
struct RunJson {
    config: SolverConfig,
    grid: GridSpec,
    result: RunResult,
    metadata: Volatile,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut s = String::from("step,time_s,v_volts,i_amps\n");
        for n in 0..self.port.len() {
            let _ = writeln!(s, "{},{},{},{}", self.port.step[n], self.port.time_s[n], self.port.v[n], self.port.i[n]);
        }
        fs::write(dir.join("port.csv"), s)?;

        let mut s = String::from("step");
        for p in &self.probes {
            s.push(',');
            s.push_str(&p.column_name());
        }
        s.push('\n');
        let rows = self.probes.iter().map(|p| p.values.len()).max().unwrap_or(0);
        for n in 0..rows {
            let _ = write!(s, "{n}");
            for p in &self.probes {
                let _ = write!(s, ",{}", p.values[n]);
            }
            s.push('\n');
        }
        fs::write(dir.join("probes.csv"), s)?;

        let mut s = String::from("step,energy_j\n");
        for (n, w) in &self.energy {
            let _ = writeln!(s, "{n},{w}");
        }
        fs::write(dir.join("energy.csv"), s)?;

        let h = dir.join("huygens.bin");
        match &self.huygens {
            Some(data) => data.write(&h)?,
            None if h.exists() => fs::remove_file(&h)?,
            None => {}
        }

        let json = RunJson {
            config: self.config.clone(),
            grid: self.metadata.grid,
            result: RunResult {
                dt_s: self.metadata.dt_s,
                steps: self.metadata.steps,
                decayed: self.metadata.decayed,
                warnings: self.metadata.warnings.clone(),
                port: self.metadata.port,
                probes: self.probes.iter().map(|p| p.probe).collect(),
                has_huygens: self.huygens.is_some(),
            },
            metadata: Volatile {
                elapsed_s: self.metadata.elapsed_s,
                written_unix_s: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        };
        fs::write(dir.join("run.json"), serde_json::to_string_pretty(&json)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<RunOutput> {
        let json: RunJson = serde_json::from_str(&fs::read_to_string(dir.join("run.json"))?)?;
        let r = json.result;

        let mut port = PortRecord::default();
        for (ln, row) in csv_rows(&dir.join("port.csv"), 4)?.into_iter().enumerate() {
            let step = row[0] as usize;
            if step as f64 != row[0] {
                return Err(Error::Format(format!("port.csv line {}: bad step", ln + 2)));
            }
            port.push(step, row[1], row[2], row[3]);
        }

        let mut probes: Vec<ProbeRecord> = r.probes.iter().map(|&probe| ProbeRecord { probe, values: Vec::new() }).collect();
        let probe_file = dir.join("probes.csv");
        if !probes.is_empty() || probe_file.exists() {
            for row in csv_rows(&probe_file, probes.len() + 1)? {
                for (p, v) in probes.iter_mut().zip(&row[1..]) {
                    p.values.push(*v);
                }
            }
        }

        let energy = csv_rows(&dir.join("energy.csv"), 2)?.into_iter().map(|row| (row[0] as usize, row[1])).collect();
        let huygens = if r.has_huygens { Some(HuygensData::read(&dir.join("huygens.bin"))?) } else { None };

        Ok(RunOutput {
            config: json.config,
            metadata: RunMetadata {
                dt_s: r.dt_s,
                steps: r.steps,
                decayed: r.decayed,
                warnings: r.warnings,
                grid: json.grid,
                port: r.port,
                elapsed_s: json.metadata.elapsed_s,
            },
            port,
            probes,
            huygens,
            energy,
        })
    }
}

fn csv_rows(path: &Path, cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format(format!("{name} is empty")))?;
    if header.split(',').count() != cols {
        return Err(Error::Format(format!("{name}: expected {cols} columns")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let row = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("{name} line {}: {e}", n + 2)))?;
            if row.len() != cols {
                return Err(Error::Format(format!("{name} line {}: expected {cols} fields", n + 2)));
            }
            Ok(row)
        })
        .collect()
}
