//! One-parameter sweeps over the slotted-array presets.
//!
//! Every point is an independent simulate-and-analyze run written to its
//! own subdirectory. A point that fails is recorded as such and the sweep
//! carries on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_run, AnalyzeOptions};
use crate::error::{Error, Result};
use crate::par::{for_each_item, Parallelism};
use crate::presets::{fixture, FixtureOptions, PaperParams, Preset, SWEEP_PARAMETERS};
use crate::solver::run_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// `points` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(parameter: &str, start: f64, stop: f64, points: usize) -> Result<SweepSpec> {
        if points == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config("sweep needs at least one point and finite bounds".into()));
        }
        let values = match points {
            1 => vec![start],
            n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
        };
        Ok(SweepSpec { parameter: parameter.to_string(), values })
    }

    pub fn validate(&self) -> Result<()> {
        if !SWEEP_PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(Error::geometry(format!(
                "unknown sweep parameter '{}' (expected one of {})",
                self.parameter,
                SWEEP_PARAMETERS.join(", ")
            )));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepJob {
    pub preset: Preset,
    pub params: PaperParams,
    pub fixture: FixtureOptions,
    pub analyze: AnalyzeOptions,
    pub spec: SweepSpec,
    pub output_dir: PathBuf,
    /// How points are scheduled. Each point's solver runs sequentially when
    /// points run concurrently.
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Failed,
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub parameter: String,
    pub value: f64,
    pub status: PointStatus,
    pub band_count: Option<usize>,
    pub bandwidth_ghz: Option<f64>,
    pub widest_band_ghz: Option<f64>,
    pub min_s11_db: Option<f64>,
    pub min_s11_ghz: Option<f64>,
    pub steps: Option<usize>,
    pub directory: String,
    pub error: String,
}

pub fn point_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("point_{index:03}"))
}

fn run_point(job: &SweepJob, index: usize, value: f64, solver_mode: Parallelism) -> Result<SweepRow> {
    let mut params = job.params;
    params.set(&job.spec.parameter, value)?;
    let mut fx = fixture(job.preset, &params, &job.fixture)?;
    fx.config.parallelism = solver_mode;
    let run = run_grid(&fx.grid, &fx.config)?;
    let dir = point_dir(&job.output_dir, index);
    run.write(&dir)?;
    let a = analyze_run(&run, &AnalyzeOptions { parallelism: solver_mode, ..job.analyze.clone() })?;
    a.write(&dir)?;
    let widest = a.bands.iter().map(|b| b.width_hz()).fold(0.0, f64::max);
    Ok(SweepRow {
        index,
        parameter: job.spec.parameter.clone(),
        value,
        status: PointStatus::Ok,
        band_count: Some(a.bands.len()),
        bandwidth_ghz: Some(a.total_bandwidth_hz() / 1e9),
        widest_band_ghz: Some(widest / 1e9),
        min_s11_db: Some(a.metrics.min_s11_db),
        min_s11_ghz: Some(a.metrics.min_s11_frequency_hz / 1e9),
        steps: Some(run.metadata.steps),
        directory: dir.display().to_string(),
        error: String::new(),
    })
}

/// Runs every point and returns the rows in parameter order.
pub fn run_sweep(job: &SweepJob) -> Result<Vec<SweepRow>> {
    job.spec.validate()?;
    std::fs::create_dir_all(&job.output_dir)?;
    let solver_mode = if job.parallelism.is_parallel() && job.spec.values.len() > 1 {
        Parallelism::Sequential
    } else {
        job.parallelism
    };
    let mut rows: Vec<(usize, f64, Option<SweepRow>)> =
        job.spec.values.iter().enumerate().map(|(i, &v)| (i, v, None)).collect();
    for_each_item(job.parallelism, &mut rows, |(i, v, out)| {
        let row = run_point(job, *i, *v, solver_mode).unwrap_or_else(|e| {
            log::warn!("sweep point {i} ({} = {v}) failed: {e}", job.spec.parameter);
            SweepRow {
                index: *i,
                parameter: job.spec.parameter.clone(),
                value: *v,
                status: PointStatus::Failed,
                band_count: None,
                bandwidth_ghz: None,
                widest_band_ghz: None,
                min_s11_db: None,
                min_s11_ghz: None,
                steps: None,
                directory: point_dir(&job.output_dir, *i).display().to_string(),
                error: e.to_string(),
            }
        });
        *out = Some(row);
    });
    Ok(rows.into_iter().filter_map(|r| r.2).collect())
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_points() {
        let s = SweepSpec::linspace("t_l", 2.0, 3.0, 5).unwrap();
        assert_eq!(s.values, vec![2.0, 2.25, 2.5, 2.75, 3.0]);
        assert_eq!(SweepSpec::linspace("g", 2.2, 9.0, 1).unwrap().values, vec![2.2]);
        assert!(SweepSpec::linspace("g", 1.0, 2.0, 0).is_err());
        assert!(SweepSpec { parameter: "nope".into(), values: vec![1.0] }.validate().is_err());
    }

    #[test]
    fn failed_points_do_not_stop_the_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let preset = Preset::DoubleT;
        let mut fixture = FixtureOptions::for_preset(preset);
        fixture.cell_mm = 0.5;
        fixture.max_steps = Some(40);
        let job = SweepJob {
            preset,
            params: PaperParams::default(),
            fixture,
            analyze: AnalyzeOptions::default(),
            // a bar longer than the patch is rejected by the geometry builder
            spec: SweepSpec { parameter: "t_l".into(), values: vec![2.4, 40.0] },
            output_dir: dir.path().to_path_buf(),
            parallelism: Parallelism::Rayon,
        };
        let rows = run_sweep(&job).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].status, PointStatus::Failed);
        assert!(rows[1].error.contains("geometry"), "{}", rows[1].error);
        write_sweep_csv(&rows, &dir.path().join("sweep.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(text.starts_with("index,parameter,value,status,"));
        assert_eq!(text.lines().count(), 3);
    }
}
