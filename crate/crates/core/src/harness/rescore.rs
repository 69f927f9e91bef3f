//! Recompute scores from a trajectory log.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::log::{parse_log, samples, TickRecord};
use super::report::{Report, Summary};
use super::HarnessError;
use crate::road::{build_road, RoadSpec};
use crate::scoring::{score_samples, RunScores, ScoringParams};

/// Everything besides the log that scoring depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoreContext {
    /// Road geometry, for lane width and curvature under the ego.
    pub road: RoadSpec,
    pub dt: f64,
    pub params: ScoringParams,
}

impl RescoreContext {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            road: cfg.scenario.road.clone(),
            dt: cfg.scenario.dt,
            params: cfg.scoring.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoreOutput {
    pub log: String,
    pub context: RescoreContext,
    pub summary: Summary,
    pub scores: RunScores,
}

pub fn rescore_records(records: &[TickRecord], ctx: &RescoreContext) -> Result<RunScores, HarnessError> {
    let road = build_road(&ctx.road)?;
    Ok(score_samples(&samples(records, &road), ctx.dt, &ctx.params)?)
}

pub fn read_log(path: &Path) -> Result<Vec<TickRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_log(BufReader::new(file))
}

pub fn rescore_log(path: &Path, ctx: &RescoreContext) -> Result<RescoreOutput, HarnessError> {
    let scores = rescore_records(&read_log(path)?, ctx)?;
    Ok(RescoreOutput {
        log: path.display().to_string(),
        context: ctx.clone(),
        summary: Summary::of(&scores),
        scores,
    })
}

/// Rescore a report's own log with the parameters embedded in it.
pub fn rescore_report(report_path: &Path) -> Result<RunScores, HarnessError> {
    let report = Report::load(report_path)?;
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let ctx = RescoreContext::from_config(&report.config);
    rescore_records(&read_log(&dir.join(&report.files.trajectory))?, &ctx)
}
