//! Run settings: a JSON file whose keys mirror the command-line flags.
//! Flags win over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use patchfield::presets::{FixtureOptions, PaperParams, Preset};
use patchfield::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmin_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmax_ghz: Option<f64>,
    /// Fixed step count; replaces the decay criterion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpml_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub progress_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequential: Option<bool>,
    /// Overrides of named array dimensions, e.g. `{"g": 1.59}`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

pub fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Flags shared by `simulate` and `sweep`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// JSON file with the same keys as these flags (underscored).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in geometry or fixture.
    #[arg(long, conflicts_with = "scene")]
    pub preset: Option<String>,
    /// Scene JSON written by `geometry`.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub cell_mm: Option<f64>,
    #[arg(long)]
    pub fmin_ghz: Option<f64>,
    #[arg(long)]
    pub fmax_ghz: Option<f64>,
    /// Run exactly this many steps instead of stopping on decay.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Step cap for the decay criterion.
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub cpml_cells: Option<usize>,
    /// Output directory.
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Steps between progress lines (0 disables them).
    #[arg(long)]
    pub progress_every: Option<usize>,
    /// S11 level that delimits a band, in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold_db: Option<f64>,
    /// Array gap g in mm.
    #[arg(long)]
    pub gap_mm: Option<f64>,
    /// Rotation between neighbouring elements in degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub rotation_deg: Option<f64>,
    /// Override a named dimension, e.g. `--param t_l=2.6` (repeatable).
    #[arg(long = "param", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// File settings (if any) overridden by flags.
    pub fn resolve(flags: &RunFlags) -> Result<RunConfig> {
        let mut c = match &flags.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { c.$f = flags.$f.clone(); } )* };
        }
        take!(cell_mm, fmin_ghz, fmax_ghz, steps, max_steps, cpml_cells, output_dir, progress_every, threshold_db);
        if flags.preset.is_some() {
            c.preset = flags.preset.clone();
            c.scene = None;
        }
        if flags.scene.is_some() {
            c.scene = flags.scene.clone();
            c.preset = None;
        }
        if flags.sequential {
            c.sequential = Some(true);
        }
        if let Some(g) = flags.gap_mm {
            c.params.insert("g".into(), g);
        }
        if let Some(r) = flags.rotation_deg {
            c.params.insert("rotation_deg".into(), r);
        }
        for (k, v) in &flags.params {
            c.params.insert(k.clone(), *v);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(cell) = self.cell_mm {
            if !(cell > 0.0 && cell.is_finite()) {
                return Err(Error::Config(format!("cell_mm = {cell} must be positive")));
            }
        }
        for f in [self.fmin_ghz, self.fmax_ghz].into_iter().flatten() {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("frequency {f} GHz must be positive")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.fmin_ghz, self.fmax_ghz) {
            if lo >= hi {
                return Err(Error::Config(format!("frequency window needs fmin < fmax (got {lo}, {hi} GHz)")));
            }
        }
        Ok(())
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        self.preset.as_deref().map(Preset::from_name).transpose()
    }

    pub fn paper_params(&self) -> Result<PaperParams> {
        let mut p = PaperParams::default();
        for (k, v) in &self.params {
            p.set(k, *v)?;
        }
        Ok(p)
    }

    /// Fixture settings, starting from the preset's own defaults.
    pub fn fixture_options(&self, preset: Option<Preset>) -> Result<FixtureOptions> {
        let mut o = FixtureOptions::for_preset(preset.unwrap_or(Preset::Paper3x3));
        if let Some(c) = self.cell_mm {
            o.cell_mm = c;
        }
        if let Some(f) = self.fmin_ghz {
            o.band_hz.0 = f * 1e9;
        }
        if let Some(f) = self.fmax_ghz {
            o.band_hz.1 = f * 1e9;
        }
        if !(o.band_hz.0 < o.band_hz.1) {
            return Err(Error::Config(format!(
                "frequency window {}-{} GHz is empty",
                o.band_hz.0 / 1e9,
                o.band_hz.1 / 1e9
            )));
        }
        o.cpml_cells = self.cpml_cells.or(o.cpml_cells);
        o.max_steps = self.max_steps.or(o.max_steps);
        Ok(o)
    }

    pub fn output_dir(&self, default: &str) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"preset": "double-t", "cell_mm": 0.3, "fmin_ghz": 5, "params": {"g": 1.59, "t_l": 2.5}}"#).unwrap();
        let flags = RunFlags {
            config: Some(p),
            cell_mm: Some(0.2),
            params: vec![("t_l".into(), 2.6)],
            ..Default::default()
        };
        let c = RunConfig::resolve(&flags).unwrap();
        assert_eq!(c.cell_mm, Some(0.2));
        assert_eq!(c.fmin_ghz, Some(5.0));
        assert_eq!(c.params["g"], 1.59);
        assert_eq!(c.params["t_l"], 2.6);
        let o = c.fixture_options(c.preset().unwrap()).unwrap();
        assert_eq!(o.band_hz, (5e9, 16e9));
    }

    #[test]
    fn unknown_keys_and_bad_windows_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"cell": 1}"#).is_err());
        let flags = RunFlags { fmin_ghz: Some(9.0), fmax_ghz: Some(4.0), ..Default::default() };
        assert!(RunConfig::resolve(&flags).is_err());
        let flags = RunFlags { cell_mm: Some(-1.0), ..Default::default() };
        assert!(RunConfig::resolve(&flags).is_err());
    }
}
