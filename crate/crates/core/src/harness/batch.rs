//! Weather × rig × seed grids over a shared base config.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::compare::compare;
use super::config::{BatchSpec, RunConfig, WeatherSpec};
use super::report::{write_outputs, REPORT_FILE};
use super::run::{run_config, RunOutcome, Termination};
use super::HarnessError;
use crate::parallel::{par_map, seq_map, with_workers};
use crate::perception::SensorRig;

pub const INDEX_FILE: &str = "index.json";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_TABLE: &str = "comparison.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub preset: String,
    pub rig: SensorRig,
    pub seed: u64,
}

impl Cell {
    pub fn name(&self) -> String {
        format!("{}__{}__seed{}", self.preset, self.rig, self.seed)
    }

    /// The base config with this cell's weather, rig and seed. Nothing else
    /// varies between cells.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        cfg.scenario.weather = WeatherSpec::Preset(self.preset.clone());
        cfg.scenario.rig = self.rig;
        cfg.scenario.seed = self.seed;
        cfg
    }
}

pub fn cells(spec: &BatchSpec) -> Result<Vec<Cell>, HarnessError> {
    spec.validate()?;
    let mut out = Vec::new();
    for preset in &spec.presets {
        for rig in &spec.rigs {
            let rig: SensorRig = rig.parse().map_err(|e: crate::perception::UnknownRig| {
                HarnessError::Config(e.to_string())
            })?;
            for &seed in &spec.seeds {
                out.push(Cell {
                    preset: preset.clone(),
                    rig,
                    seed,
                });
            }
        }
    }
    Ok(out)
}

/// Run every cell in memory, on the rayon pool when `parallel` is set.
pub fn run_cells(cells: &[Cell], base: &RunConfig, parallel: bool) -> Vec<Result<RunOutcome, HarnessError>> {
    let job = |c: &Cell| run_config(&c.config(base));
    if parallel {
        par_map(cells, job)
    } else {
        seq_map(cells, job)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub name: String,
    pub preset: String,
    pub rig: String,
    pub seed: u64,
    /// Report path relative to the batch directory.
    pub report: Option<String>,
    pub termination: Option<Termination>,
    pub aggregate: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchIndex {
    pub cells: Vec<CellResult>,
    pub comparison: Option<String>,
    pub comparison_table: Option<String>,
}

fn run_cell(cell: &Cell, base: &RunConfig, out_root: &Path) -> CellResult {
    let name = cell.name();
    let dir = out_root.join(&name);
    let mut cfg = cell.config(base);
    cfg.output.dir = dir.clone();
    let mut result = CellResult {
        name: name.clone(),
        preset: cell.preset.clone(),
        rig: cell.rig.to_string(),
        seed: cell.seed,
        report: None,
        termination: None,
        aggregate: None,
        error: None,
    };
    match run_config(&cfg).and_then(|out| write_outputs(&out, &dir).map(|_| out)) {
        Ok(out) => {
            result.report = Some(format!("{name}/{REPORT_FILE}"));
            result.termination = Some(out.termination);
            result.aggregate = out.scores.as_ref().ok().map(|s| s.aggregate);
            if let Err(e) = &out.scores {
                result.error = Some(e.to_string());
            }
        }
        Err(e) => {
            warn!(cell = %name, error = %e, "batch cell failed");
            result.error = Some(e.to_string());
        }
    }
    result
}

/// Run the grid into `out_root`, one directory per cell, then write the
/// index and a comparison of every scored cell. Failed cells are recorded
/// and do not stop the batch.
pub fn run_batch(spec: &BatchSpec, out_root: &Path, workers: Option<usize>) -> Result<BatchIndex, HarnessError> {
    let cells = cells(spec)?;
    fs::create_dir_all(out_root).map_err(|e| HarnessError::io(out_root, e))?;
    info!(cells = cells.len(), ?workers, "starting batch");
    let results = with_workers(workers, || par_map(&cells, |c| run_cell(c, &spec.base, out_root)));

    let mut scored = Vec::new();
    for r in &results {
        if let (Some(rel), None) = (&r.report, &r.error) {
            let report = super::report::Report::load(&out_root.join(rel))?;
            if let Some(s) = report.scores {
                scored.push((r.name.clone(), s));
            }
        }
    }
    let mut index = BatchIndex {
        cells: results,
        comparison: None,
        comparison_table: None,
    };
    if scored.len() >= 2 {
        let refs: Vec<_> = scored.iter().map(|(n, s)| (n.clone(), s)).collect();
        let cmp = compare(&refs)?;
        let json = serde_json::to_string_pretty(&cmp).expect("comparisons serialize");
        write_file(&out_root.join(COMPARISON_JSON), &json)?;
        write_file(&out_root.join(COMPARISON_TABLE), &cmp.render())?;
        index.comparison = Some(COMPARISON_JSON.to_string());
        index.comparison_table = Some(COMPARISON_TABLE.to_string());
    }
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    write_file(&out_root.join(INDEX_FILE), &json)?;
    Ok(index)
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, format!("{text}\n")).map_err(|e| HarnessError::io(path, e))
}
