//! Self-describing run reports and the files written next to them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::log::write_log;
use super::run::{FallbackStats, RunOutcome, Termination};
use super::HarnessError;
use crate::scoring::{mean, median, Cdf, RunScores};
use crate::weather::{WeatherConfig, WeatherEffects};

pub const REPORT_FORMAT: &str = "wxdrive-report/1";
pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const MEMORY_FILE: &str = "memory.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const CDF_BASIS: &str = "per-frame: each CDF holds one sample per logged tick of this run";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherBlock {
    pub name: String,
    pub params: WeatherConfig,
    pub effects: WeatherEffects,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            median: median(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub safety: Stat,
    pub comfort: Stat,
    pub efficiency: Stat,
    pub speed_score: f64,
    pub aggregate: f64,
    pub n_frames: usize,
    pub n_speeding: usize,
}

impl Summary {
    pub fn of(s: &RunScores) -> Self {
        Self {
            safety: Stat::of(&s.safety),
            comfort: Stat::of(&s.comfort),
            efficiency: Stat::of(&s.efficiency),
            speed_score: s.speed_score,
            aggregate: s.aggregate,
            n_frames: s.n_frames,
            n_speeding: s.n_speeding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub trajectory: String,
    pub memory: String,
    pub cdf_safety: String,
    pub cdf_comfort: String,
    pub cdf_efficiency: String,
}

impl Default for OutputFiles {
    fn default() -> Self {
        Self {
            trajectory: TRAJECTORY_FILE.to_string(),
            memory: MEMORY_FILE.to_string(),
            cdf_safety: "cdf_safety.csv".to_string(),
            cdf_comfort: "cdf_comfort.csv".to_string(),
            cdf_efficiency: "cdf_efficiency.csv".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub config: RunConfig,
    pub weather: WeatherBlock,
    pub rig: String,
    pub termination: Termination,
    pub failure: Option<String>,
    pub ticks: usize,
    pub fallback: FallbackStats,
    pub cdf_basis: String,
    pub summary: Option<Summary>,
    pub scores: Option<RunScores>,
    pub score_error: Option<String>,
    /// Paths relative to the report's directory.
    pub files: OutputFiles,
}

impl Report {
    pub fn from_outcome(out: &RunOutcome) -> Self {
        let (scores, score_error) = match &out.scores {
            Ok(s) => (Some(s.clone()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            format: REPORT_FORMAT.to_string(),
            config: out.config.clone(),
            weather: WeatherBlock {
                name: out.weather_name.clone(),
                params: out.weather,
                effects: out.effects,
            },
            rig: out.config.scenario.rig.to_string(),
            termination: out.termination,
            failure: out.failure.clone(),
            ticks: out.records.len(),
            fallback: out.fallback.clone(),
            cdf_basis: CDF_BASIS.to_string(),
            summary: scores.as_ref().map(Summary::of),
            scores,
            score_error,
            files: OutputFiles::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Report {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn write_cdf(cdf: &Cdf, path: &Path) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    cdf.write_csv(&mut w).map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Write log, memory, report and CDF tables of `out` into `dir`. Returns the
/// report path.
pub fn write_outputs(out: &RunOutcome, dir: &Path) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let report = Report::from_outcome(out);
    let files = &report.files;

    let path = dir.join(&files.trajectory);
    write_log(&out.records, create(&path)?).map_err(|e| HarnessError::io(&path, e))?;

    let path = dir.join(&files.memory);
    out.memory
        .write_jsonl(create(&path)?)
        .map_err(|e| HarnessError::io(&path, e))?;

    if let Some(s) = &report.scores {
        write_cdf(&s.cdfs.safety, &dir.join(&files.cdf_safety))?;
        write_cdf(&s.cdfs.comfort, &dir.join(&files.cdf_comfort))?;
        write_cdf(&s.cdfs.efficiency, &dir.join(&files.cdf_efficiency))?;
    }

    let path = dir.join(REPORT_FILE);
    let mut w = create(&path)?;
    w.write_all(report.to_json().as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}
